//! Solver for safety coalition games over parameterized arenas.

pub mod arena;
pub mod generators;
pub mod lang;
pub mod product;
pub mod synthesis;
pub mod unfolding;
pub mod verify;
