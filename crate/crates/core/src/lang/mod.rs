//! Regular languages over a finite alphabet: the expression syntax used on
//! arena edges, minimal complete DFAs, and ultimately periodic analyses.

mod alphabet;
mod dfa;
mod expr;
mod nfa;
mod periodic;
pub(crate) mod table;

pub use alphabet::{Alphabet, Letter};
pub use dfa::{compile, Dfa, StateId};
pub use expr::{parse, LangExpr};
pub use periodic::{length_set, prefix_membership, UPSet, UPWord};

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("letter '{0}' declared twice")]
    DuplicateLetter(String),
    #[error("'{0}' is not a valid letter name")]
    InvalidLetter(String),
    #[error("unknown letter '{0}'")]
    UnknownLetter(String),
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("modulus must be at least 1, got {0}")]
    BadModulus(u64),
    #[error("residue {residue} out of range for modulus {modulus}")]
    BadResidue { residue: u64, modulus: u64 },
    #[error("malformed transition table")]
    MalformedDfa,
    #[error("the period of an ultimately periodic word must be nonempty")]
    EmptyPeriod,
}

/// Parses and compiles in one step.
pub fn compile_str(text: &str, alphabet: &Arc<Alphabet>) -> Result<Dfa, LangError> {
    Ok(compile(&parse(text, alphabet)?, alphabet))
}
