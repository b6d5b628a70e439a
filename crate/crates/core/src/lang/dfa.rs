use std::fmt;
use std::sync::Arc;

use super::expr::LangExpr;
use super::nfa::{Fragment, Nfa};
use super::table::Table;
use super::{Alphabet, LangError, Letter};

/// A complete deterministic automaton whose language is a subset of Σ⁺.
///
/// Every constructor returns a minimal automaton with states numbered in
/// breadth-first order from the initial state, so equal languages give equal
/// values (`==` is language equality).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    alphabet: Arc<Alphabet>,
    table: Table,
}

/// State index of a [`Dfa`].
pub type StateId = usize;

impl Dfa {
    fn from_inner(alphabet: Arc<Alphabet>, table: Table) -> Dfa {
        let table = table.without_empty_word().minimize();
        debug_assert!(!table.accepting[table.initial]);
        Dfa { alphabet, table }
    }

    /// Builds an automaton from an explicit table (`trans[state][letter]`).
    pub fn from_transitions(
        alphabet: Arc<Alphabet>,
        trans: &[Vec<StateId>],
        initial: StateId,
        accepting: &[StateId],
    ) -> Result<Dfa, LangError> {
        let k = alphabet.len();
        let n = trans.len();
        if initial >= n || trans.iter().any(|row| row.len() != k || row.iter().any(|&t| t >= n)) {
            return Err(LangError::MalformedDfa);
        }
        let mut acc = vec![false; n];
        for &s in accepting {
            *acc.get_mut(s).ok_or(LangError::MalformedDfa)? = true;
        }
        let table = Table {
            letters: k,
            trans: trans.iter().flatten().copied().collect(),
            accepting: acc,
            initial,
        };
        Ok(Dfa::from_inner(alphabet, table))
    }

    /// Σ⁺.
    pub fn sigma_plus(alphabet: Arc<Alphabet>) -> Dfa {
        let k = alphabet.len();
        let table = Table {
            letters: k,
            trans: vec![1; 2 * k],
            accepting: vec![false, true],
            initial: 0,
        };
        Dfa::from_inner(alphabet, table)
    }

    /// ∅.
    pub fn empty(alphabet: Arc<Alphabet>) -> Dfa {
        let k = alphabet.len();
        let table = Table {
            letters: k,
            trans: vec![0; k],
            accepting: vec![false],
            initial: 0,
        };
        Dfa::from_inner(alphabet, table)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.table.states()
    }

    pub fn initial(&self) -> StateId {
        self.table.initial
    }

    #[inline]
    pub fn next(&self, state: StateId, letter: Letter) -> StateId {
        self.table.next(state, letter)
    }

    #[inline]
    pub fn is_accepting(&self, state: StateId) -> bool {
        self.table.accepting[state]
    }

    pub fn run(&self, word: &[Letter]) -> StateId {
        word.iter().fold(self.initial(), |s, &l| self.next(s, l))
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.is_accepting(self.run(word))
    }

    /// Membership with letter validation.
    pub fn member(&self, word: &[Letter]) -> Result<bool, LangError> {
        if let Some(&bad) = word.iter().find(|&&l| l >= self.alphabet.len()) {
            return Err(LangError::UnknownLetter(format!("#{bad}")));
        }
        Ok(self.accepts(word))
    }

    /// True when no accepting state is reachable from `state`.
    pub fn is_dead(&self, state: StateId) -> bool {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![state];
        seen[state] = true;
        while let Some(s) = stack.pop() {
            if self.is_accepting(s) {
                return false;
            }
            for l in self.alphabet.letters() {
                let t = self.next(s, l);
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        true
    }

    pub fn is_empty(&self) -> bool {
        // Minimal form of ∅ is the single rejecting state.
        self.num_states() == 1 && !self.is_accepting(0)
    }

    pub fn is_sigma_plus(&self) -> bool {
        self.num_states() == 2 && self.is_accepting(1) && self.alphabet.letters().all(|l| self.next(0, l) == 1 && self.next(1, l) == 1)
    }

    fn check_alphabet(&self, other: &Dfa) {
        assert!(
            Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet,
            "automata over different alphabets"
        );
    }

    pub fn union(&self, other: &Dfa) -> Dfa {
        self.check_alphabet(other);
        Dfa::from_inner(self.alphabet.clone(), self.table.product(&other.table, |a, b| a || b))
    }

    pub fn intersection(&self, other: &Dfa) -> Dfa {
        self.check_alphabet(other);
        Dfa::from_inner(self.alphabet.clone(), self.table.product(&other.table, |a, b| a && b))
    }

    pub fn difference(&self, other: &Dfa) -> Dfa {
        self.check_alphabet(other);
        Dfa::from_inner(self.alphabet.clone(), self.table.product(&other.table, |a, b| a && !b))
    }

    /// Σ⁺ ∖ L.
    pub fn complement(&self) -> Dfa {
        Dfa::from_inner(self.alphabet.clone(), self.table.flip())
    }

    pub fn is_disjoint(&self, other: &Dfa) -> bool {
        self.intersection(other).is_empty()
    }

    /// Language equality (both operands are minimal and canonically numbered).
    pub fn equivalent(&self, other: &Dfa) -> bool {
        self.check_alphabet(other);
        self.table == other.table
    }

    /// A shortest accepted word, if any.
    pub fn shortest_word(&self) -> Option<Vec<Letter>> {
        let n = self.num_states();
        let mut parent: Vec<Option<(StateId, Letter)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([self.initial()]);
        seen[self.initial()] = true;
        while let Some(s) = queue.pop_front() {
            if self.is_accepting(s) {
                let mut word = Vec::new();
                let mut cur = s;
                while let Some((p, l)) = parent[cur] {
                    word.push(l);
                    cur = p;
                }
                word.reverse();
                return Some(word);
            }
            for l in self.alphabet.letters() {
                let t = self.next(s, l);
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some((s, l));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Transition rows, `rows[state][letter]`.
    pub fn transitions(&self) -> Vec<Vec<StateId>> {
        (0..self.num_states())
            .map(|s| self.alphabet.letters().map(|l| self.next(s, l)).collect())
            .collect()
    }

    pub fn accepting_states(&self) -> Vec<StateId> {
        (0..self.num_states()).filter(|&s| self.is_accepting(s)).collect()
    }
}

impl fmt::Debug for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Dfa over {} ({} states)", self.alphabet, self.num_states())?;
        for s in 0..self.num_states() {
            let marker = match (s == self.initial(), self.is_accepting(s)) {
                (true, _) => "->",
                (false, true) => " *",
                _ => "  ",
            };
            write!(f, "{marker} {s}:")?;
            for l in self.alphabet.letters() {
                write!(f, " {}→{}", self.alphabet.name(l), self.next(s, l))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Compiles an expression into its minimal complete automaton.
pub fn compile(expr: &LangExpr, alphabet: &Arc<Alphabet>) -> Dfa {
    Dfa::from_inner(alphabet.clone(), inner(expr, alphabet.len()))
}

/// Table with the full (Σ*) semantics of a sub-expression.
fn inner(expr: &LangExpr, k: usize) -> Table {
    match expr {
        LangExpr::Mod {
            letter,
            modulus,
            residues,
        } => modulo_table(k, *letter, *modulus, residues),
        LangExpr::Explicit(dfa) => dfa.table.clone(),
        LangExpr::Inter(x, y) => inner(x, k).product(&inner(y, k), |a, b| a && b).minimize(),
        LangExpr::Diff(x, y) => inner(x, k).product(&inner(y, k), |a, b| a && !b).minimize(),
        LangExpr::Compl(x) => inner(x, k).flip().without_empty_word().minimize(),
        LangExpr::Letter(_) | LangExpr::Any | LangExpr::Concat(_) | LangExpr::Union(..) | LangExpr::Star(_) | LangExpr::Plus(_) => {
            let mut nfa = Nfa::new(k);
            let frag = thompson(expr, &mut nfa, k);
            nfa.determinize(frag).minimize()
        }
    }
}

fn thompson(expr: &LangExpr, nfa: &mut Nfa, k: usize) -> Fragment {
    match expr {
        LangExpr::Letter(l) => nfa.letters_fragment([*l]),
        LangExpr::Any => nfa.letters_fragment(0..k),
        LangExpr::Concat(items) => {
            let mut frags = items.iter().map(|x| thompson(x, nfa, k)).collect::<Vec<_>>().into_iter();
            match frags.next() {
                None => nfa.epsilon(),
                Some(first) => frags.fold(first, |acc, f| nfa.concat(acc, f)),
            }
        }
        LangExpr::Union(x, y) => {
            let a = thompson(x, nfa, k);
            let b = thompson(y, nfa, k);
            nfa.union(a, b)
        }
        LangExpr::Star(x) => {
            let a = thompson(x, nfa, k);
            nfa.star(a)
        }
        LangExpr::Plus(x) => {
            let a = thompson(x, nfa, k);
            nfa.plus(a)
        }
        other => {
            let table = inner(other, k);
            nfa.embed(&table)
        }
    }
}

/// Cycle automaton with a fresh initial state, one state per residue and a
/// rejecting sink entered on any other letter.
fn modulo_table(k: usize, letter: Letter, modulus: u64, residues: &std::collections::BTreeSet<u64>) -> Table {
    let p = modulus as usize;
    let sink = p + 1;
    // state 0 is the initial state, state 1 + r counts residue r
    let mut trans = vec![sink; (p + 2) * k];
    for r in 0..p {
        trans[(1 + r) * k + letter] = 1 + (r + 1) % p;
    }
    trans[letter] = 1 + 1 % p;
    let mut accepting = vec![false; p + 2];
    for &r in residues {
        accepting[1 + r as usize] = true;
    }
    Table {
        letters: k,
        trans,
        accepting,
        initial: 0,
    }
}
