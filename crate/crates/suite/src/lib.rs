//! Hosts the end-to-end acceptance checks in `tests/acceptance.rs`. Kept as
//! its own package so that a failing criterion does not stop the other
//! crates' tests from running first.
