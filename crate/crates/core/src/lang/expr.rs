use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use super::{Alphabet, Dfa, LangError, Letter};

/// An edge-label language over an [`Alphabet`].
///
/// Sub-expressions have the usual regular-expression semantics (so `a*` may
/// contain the empty word), but the language denoted by a whole expression is
/// always intersected with Σ⁺. `Compl` is taken relative to Σ⁺.
#[derive(Debug, Clone)]
pub enum LangExpr {
    Letter(Letter),
    /// `.`: any single letter.
    Any,
    Concat(Vec<LangExpr>),
    Union(Box<LangExpr>, Box<LangExpr>),
    Star(Box<LangExpr>),
    Plus(Box<LangExpr>),
    /// Words `letter^j` with `j ≥ 1` and `j mod modulus ∈ residues`.
    Mod {
        letter: Letter,
        modulus: u64,
        residues: BTreeSet<u64>,
    },
    Inter(Box<LangExpr>, Box<LangExpr>),
    Diff(Box<LangExpr>, Box<LangExpr>),
    Compl(Box<LangExpr>),
    Explicit(Arc<Dfa>),
}

impl LangExpr {
    pub fn modulo(letter: Letter, modulus: u64, residues: impl IntoIterator<Item = u64>) -> Result<Self, LangError> {
        if modulus == 0 {
            return Err(LangError::BadModulus(modulus));
        }
        let residues: BTreeSet<u64> = residues.into_iter().collect();
        if let Some(&r) = residues.iter().find(|&&r| r >= modulus) {
            return Err(LangError::BadResidue { residue: r, modulus });
        }
        Ok(LangExpr::Mod {
            letter,
            modulus,
            residues,
        })
    }

    /// Reference semantics by direct recursion on the syntax tree. Exponential;
    /// meant for short words only.
    pub fn matches(&self, word: &[Letter]) -> bool {
        !word.is_empty() && self.eval(word)
    }

    fn eval(&self, w: &[Letter]) -> bool {
        match self {
            LangExpr::Letter(l) => w.len() == 1 && w[0] == *l,
            LangExpr::Any => w.len() == 1,
            LangExpr::Concat(items) => eval_concat(items, w),
            LangExpr::Union(x, y) => x.eval(w) || y.eval(w),
            LangExpr::Star(x) => eval_star(x, w),
            LangExpr::Plus(x) => (0..=w.len()).any(|i| x.eval(&w[..i]) && eval_star(x, &w[i..])),
            LangExpr::Mod {
                letter,
                modulus,
                residues,
            } => {
                !w.is_empty()
                    && w.iter().all(|l| l == letter)
                    && residues.contains(&(w.len() as u64 % modulus))
            }
            LangExpr::Inter(x, y) => x.eval(w) && y.eval(w),
            LangExpr::Diff(x, y) => x.eval(w) && !y.eval(w),
            LangExpr::Compl(x) => !w.is_empty() && !x.eval(w),
            LangExpr::Explicit(dfa) => dfa.accepts(w),
        }
    }

    /// Renders the expression in the concrete grammar accepted by [`parse`].
    pub fn render(&self, alphabet: &Alphabet) -> String {
        let mut out = String::new();
        self.render_into(alphabet, 0, &mut out);
        out
    }

    // Precedence levels: 0 union, 1 diff, 2 inter, 3 concat, 4 unary.
    fn render_into(&self, sigma: &Alphabet, ctx: u8, out: &mut String) {
        let (level, body) = match self {
            LangExpr::Letter(l) => (5, sigma.name(*l).to_string()),
            LangExpr::Any => (5, ".".to_string()),
            LangExpr::Mod {
                letter,
                modulus,
                residues,
            } => {
                let rs: Vec<String> = residues.iter().map(|r| r.to_string()).collect();
                (5, format!("mod({},{},{{{}}})", sigma.name(*letter), modulus, rs.join(",")))
            }
            LangExpr::Explicit(_) => (5, "<dfa>".to_string()),
            LangExpr::Star(x) => (4, format!("{}*", x.render_at(sigma, 5))),
            LangExpr::Plus(x) => (4, format!("{}+", x.render_at(sigma, 5))),
            LangExpr::Compl(x) => (4, format!("!{}", x.render_at(sigma, 4))),
            LangExpr::Concat(items) => {
                let sep = if sigma.is_compact() { "" } else { " " };
                let parts: Vec<String> = items.iter().map(|x| x.render_at(sigma, 4)).collect();
                (3, parts.join(sep))
            }
            LangExpr::Inter(x, y) => (2, format!("{} & {}", x.render_at(sigma, 2), y.render_at(sigma, 3))),
            LangExpr::Diff(x, y) => (1, format!("{} \\ {}", x.render_at(sigma, 1), y.render_at(sigma, 2))),
            LangExpr::Union(x, y) => (0, format!("{} | {}", x.render_at(sigma, 0), y.render_at(sigma, 1))),
        };
        if level < ctx {
            let _ = write!(out, "({body})");
        } else {
            out.push_str(&body);
        }
    }

    fn render_at(&self, sigma: &Alphabet, ctx: u8) -> String {
        let mut s = String::new();
        self.render_into(sigma, ctx, &mut s);
        s
    }
}

fn eval_concat(items: &[LangExpr], w: &[Letter]) -> bool {
    match items.split_first() {
        None => w.is_empty(),
        Some((head, rest)) => (0..=w.len()).any(|i| head.eval(&w[..i]) && eval_concat(rest, &w[i..])),
    }
}

fn eval_star(x: &LangExpr, w: &[Letter]) -> bool {
    w.is_empty() || (1..=w.len()).any(|i| x.eval(&w[..i]) && eval_star(x, &w[i..]))
}

/// Parses an edge-label expression.
///
/// Grammar, loosest binding first: `|` (union), `\` (difference), `&`
/// (intersection), juxtaposition (concatenation), then the unary operators:
/// prefix `!` (complement in Σ⁺) and postfix `*`, `+`. Atoms are declared
/// letters (longest match), `.`, parenthesised expressions and
/// `mod(letter, p, {r1, ...})`, optionally followed by a `+` marker which is a
/// no-op since modular languages never contain the empty word.
pub fn parse(text: &str, alphabet: &Alphabet) -> Result<LangExpr, LangError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        sigma: alphabet,
    };
    let expr = p.union()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    sigma: &'a Alphabet,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), LangError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn error(&self, message: &str) -> LangError {
        LangError::Syntax {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn union(&mut self) -> Result<LangExpr, LangError> {
        let mut lhs = self.diff()?;
        while self.eat('|') {
            let rhs = self.diff()?;
            lhs = LangExpr::Union(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn diff(&mut self) -> Result<LangExpr, LangError> {
        let mut lhs = self.inter()?;
        while self.eat('\\') {
            let rhs = self.inter()?;
            lhs = LangExpr::Diff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn inter(&mut self) -> Result<LangExpr, LangError> {
        let mut lhs = self.concat()?;
        while self.eat('&') {
            let rhs = self.concat()?;
            lhs = LangExpr::Inter(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn concat(&mut self) -> Result<LangExpr, LangError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if matches!(c, '|' | '&' | '\\' | ')' | ',' | '}' | '*' | '+') {
                break;
            }
            items.push(self.unary()?);
        }
        match items.len() {
            0 => Err(self.error("expected an expression")),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(LangExpr::Concat(items)),
        }
    }

    fn unary(&mut self) -> Result<LangExpr, LangError> {
        if self.eat('!') {
            let inner = self.unary()?;
            return Ok(LangExpr::Compl(Box::new(inner)));
        }
        let mut expr = self.atom()?;
        loop {
            if self.eat('*') {
                expr = LangExpr::Star(Box::new(expr));
            } else if self.eat('+') {
                expr = LangExpr::Plus(Box::new(expr));
            } else {
                return Ok(expr);
            }
        }
    }

    fn atom(&mut self) -> Result<LangExpr, LangError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.union()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some('.') => {
                self.pos += 1;
                Ok(LangExpr::Any)
            }
            Some(_) if self.at_mod_keyword() => self.modulo(),
            Some(_) => {
                let start = self.pos;
                match self.sigma.longest_prefix(self.rest()) {
                    Some((letter, len)) => {
                        self.pos += len;
                        Ok(LangExpr::Letter(letter))
                    }
                    None => {
                        let token: String = self
                            .rest()
                            .chars()
                            .take_while(|c| !c.is_whitespace() && !super::alphabet::is_operator(*c))
                            .collect();
                        if token.is_empty() {
                            Err(LangError::Syntax {
                                position: start,
                                message: "unexpected character".into(),
                            })
                        } else {
                            Err(LangError::UnknownLetter(token))
                        }
                    }
                }
            }
        }
    }

    fn at_mod_keyword(&self) -> bool {
        let rest = self.rest();
        rest.starts_with("mod") && rest[3..].trim_start().starts_with('(')
    }

    fn modulo(&mut self) -> Result<LangExpr, LangError> {
        self.pos += 3;
        self.expect('(')?;
        self.skip_ws();
        let (letter, len) = self
            .sigma
            .longest_prefix(self.rest())
            .ok_or_else(|| self.error("expected a letter"))?;
        self.pos += len;
        self.expect(',')?;
        let modulus = self.number()?;
        self.expect(',')?;
        self.expect('{')?;
        let mut residues = Vec::new();
        if !self.eat('}') {
            loop {
                residues.push(self.number()?);
                if self.eat('}') {
                    break;
                }
                self.expect(',')?;
            }
        }
        self.expect(')')?;
        // Trailing `+` only restates that the language is nonempty-word only.
        self.eat('+');
        LangExpr::modulo(letter, modulus, residues)
    }

    fn number(&mut self) -> Result<u64, LangError> {
        self.skip_ws();
        let digits: String = self.rest().chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(self.error("expected a number"));
        }
        let value = digits.parse().map_err(|_| self.error("number out of range"))?;
        self.pos += digits.len();
        Ok(value)
    }
}
