use std::collections::HashMap;
use std::fmt;

use super::LangError;

/// Index of a letter in its [`Alphabet`].
pub type Letter = usize;

/// An ordered, finite set of named letters.
///
/// The declaration order is significant: every enumeration of letters and of
/// tuple letters follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, Letter>,
}

impl Alphabet {
    pub fn new<I, S>(letters: I) -> Result<Self, LangError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        for name in letters {
            let name = name.into();
            if name.is_empty() || name.chars().any(|c| c.is_whitespace() || is_operator(c)) {
                return Err(LangError::InvalidLetter(name));
            }
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(LangError::DuplicateLetter(name));
            }
            names.push(name);
        }
        if names.is_empty() {
            return Err(LangError::EmptyAlphabet);
        }
        Ok(Alphabet { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, letter: Letter) -> &str {
        &self.names[letter]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.index.get(name).copied()
    }

    pub fn letters(&self) -> std::ops::Range<Letter> {
        0..self.names.len()
    }

    /// True when every letter is a single character, so words can be
    /// written without separators.
    pub fn is_compact(&self) -> bool {
        self.names.iter().all(|n| n.chars().count() == 1)
    }

    /// Longest declared letter that is a prefix of `text`.
    pub(crate) fn longest_prefix(&self, text: &str) -> Option<(Letter, usize)> {
        let mut best: Option<(Letter, usize)> = None;
        for (i, name) in self.names.iter().enumerate() {
            if text.starts_with(name.as_str()) && best.is_none_or(|(_, l)| name.len() > l) {
                best = Some((i, name.len()));
            }
        }
        best
    }

    /// Parses a word. Tokens may be separated by whitespace; inside a token the
    /// longest declared letter is taken at each position.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Letter>, LangError> {
        let mut word = Vec::new();
        for token in text.split_whitespace() {
            let mut rest = token;
            while !rest.is_empty() {
                let (letter, len) = self
                    .longest_prefix(rest)
                    .ok_or_else(|| LangError::UnknownLetter(rest.to_string()))?;
                word.push(letter);
                rest = &rest[len..];
            }
        }
        Ok(word)
    }

    pub fn format_word(&self, word: &[Letter]) -> String {
        let sep = if self.is_compact() { "" } else { " " };
        word.iter()
            .map(|&l| self.name(l))
            .collect::<Vec<_>>()
            .join(sep)
    }
}

impl std::hash::Hash for Alphabet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.names.hash(state);
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(","))
    }
}

pub(crate) fn is_operator(c: char) -> bool {
    matches!(
        c,
        '|' | '&' | '\\' | '!' | '*' | '+' | '.' | '(' | ')' | '{' | '}' | ','
    )
}
