//! Ultimately periodic sets of positive integers and ultimately periodic
//! ω-words, with the two DFA analyses that produce such sets.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Alphabet, Dfa, LangError, Letter};

/// An ultimately periodic set of positive integers.
///
/// Membership of `k < threshold` is explicit; for `k ≥ threshold` it is
/// `cycle[(k - threshold) % period]`. Values are kept canonical (minimal
/// period, then minimal threshold), so `==` is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UPSet {
    prefix: Vec<bool>,
    cycle: Vec<bool>,
}

impl UPSet {
    /// `prefix[i]` is the membership of `i + 1`; `cycle` repeats afterwards.
    pub fn from_sequence(prefix: Vec<bool>, cycle: Vec<bool>) -> UPSet {
        assert!(!cycle.is_empty(), "period must be nonempty");
        let mut set = UPSet { prefix, cycle };
        set.canonicalize();
        set
    }

    pub fn empty() -> UPSet {
        UPSet::from_sequence(Vec::new(), vec![false])
    }

    pub fn all() -> UPSet {
        UPSet::from_sequence(Vec::new(), vec![true])
    }

    fn canonicalize(&mut self) {
        let p = self.cycle.len();
        let period = (1..=p)
            .filter(|d| p.is_multiple_of(*d))
            .find(|&d| (0..p).all(|i| self.cycle[i] == self.cycle[i % d]))
            .unwrap_or(p);
        self.cycle.truncate(period);
        while let Some(&last) = self.prefix.last() {
            if last != *self.cycle.last().unwrap() {
                break;
            }
            self.prefix.pop();
            self.cycle.rotate_right(1);
        }
    }

    /// Least `t ≥ 1` from which membership is periodic.
    pub fn threshold(&self) -> u64 {
        self.prefix.len() as u64 + 1
    }

    pub fn period(&self) -> u64 {
        self.cycle.len() as u64
    }

    pub fn contains(&self, k: u64) -> bool {
        assert!(k >= 1, "positive integers only");
        let t = self.threshold();
        if k < t {
            self.prefix[(k - 1) as usize]
        } else {
            self.cycle[((k - t) % self.period()) as usize]
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.prefix.iter().chain(&self.cycle).any(|&b| b)
    }

    pub fn min(&self) -> Option<u64> {
        (1..self.threshold() + self.period()).find(|&k| self.contains(k))
    }

    pub fn intersection(&self, other: &UPSet) -> UPSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &UPSet) -> UPSet {
        self.combine(other, |a, b| a || b)
    }

    fn combine(&self, other: &UPSet, op: impl Fn(bool, bool) -> bool) -> UPSet {
        let t = self.threshold().max(other.threshold());
        let p = num_integer::lcm(self.period(), other.period());
        let prefix = (1..t).map(|k| op(self.contains(k), other.contains(k))).collect();
        let cycle = (t..t + p).map(|k| op(self.contains(k), other.contains(k))).collect();
        UPSet::from_sequence(prefix, cycle)
    }
}

impl fmt::Display for UPSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let explicit: Vec<String> = (1..self.threshold())
            .filter(|&k| self.contains(k))
            .map(|k| k.to_string())
            .collect();
        let residues: Vec<String> = (0..self.period())
            .filter(|&r| self.cycle[r as usize])
            .map(|r| r.to_string())
            .collect();
        write!(f, "{{{}}}", explicit.join(","))?;
        if !residues.is_empty() {
            write!(
                f,
                " ∪ {{k ≥ {} : (k-{}) mod {} ∈ {{{}}}}}",
                self.threshold(),
                self.threshold(),
                self.period(),
                residues.join(",")
            )?;
        }
        Ok(())
    }
}

/// An ultimately periodic ω-word `prefix · period^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UPWord {
    prefix: Vec<Letter>,
    period: Vec<Letter>,
}

impl UPWord {
    pub fn new(prefix: Vec<Letter>, period: Vec<Letter>) -> Result<UPWord, LangError> {
        if period.is_empty() {
            return Err(LangError::EmptyPeriod);
        }
        Ok(UPWord { prefix, period })
    }

    pub fn constant(letter: Letter) -> UPWord {
        UPWord {
            prefix: Vec::new(),
            period: vec![letter],
        }
    }

    pub fn prefix(&self) -> &[Letter] {
        &self.prefix
    }

    pub fn period(&self) -> &[Letter] {
        &self.period
    }

    /// Letter at 1-based position `n`.
    pub fn letter_at(&self, n: u64) -> Letter {
        assert!(n >= 1, "positions start at 1");
        let u = self.prefix.len() as u64;
        if n <= u {
            self.prefix[(n - 1) as usize]
        } else {
            self.period[((n - u - 1) % self.period.len() as u64) as usize]
        }
    }

    /// The first `k` letters.
    pub fn prefix_of_length(&self, k: u64) -> Vec<Letter> {
        (1..=k).map(|n| self.letter_at(n)).collect()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.prefix.iter().chain(&self.period).copied()
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        format!(
            "{}({})^ω",
            alphabet.format_word(&self.prefix),
            alphabet.format_word(&self.period)
        )
    }
}

/// `{ k ≥ 1 : L(dfa) contains a word of length k }`.
///
/// Iterates the set of states reachable in exactly `k` steps; the sequence of
/// sets is eventually periodic and is cut at its first repetition.
pub fn length_set(dfa: &Dfa) -> UPSet {
    let sigma = dfa.alphabet().len();
    let n = dfa.num_states();
    let mut current = vec![false; n];
    current[dfa.initial()] = true;
    let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut bits: Vec<bool> = Vec::new();
    loop {
        let mut next = vec![false; n];
        for s in (0..n).filter(|&s| current[s]) {
            for l in 0..sigma {
                next[dfa.next(s, l)] = true;
            }
        }
        let k = bits.len() + 1;
        if let Some(&first) = seen.get(&next) {
            let cycle = bits.split_off(first - 1);
            return UPSet::from_sequence(bits, cycle);
        }
        bits.push((0..n).any(|s| next[s] && dfa.is_accepting(s)));
        seen.insert(next.clone(), k);
        current = next;
    }
}

/// `{ k ≥ 1 : the length-k prefix of w is in L(dfa) }`.
///
/// Runs the automaton along `w`; once past the prefix, the pair (state,
/// position in the period) determines the future, so the first repeated pair
/// closes the cycle.
pub fn prefix_membership(dfa: &Dfa, w: &UPWord) -> UPSet {
    let u = w.prefix.len();
    let v = w.period.len();
    let mut state = dfa.initial();
    let mut bits: Vec<bool> = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let start = u.max(1);
    for n in 1.. {
        state = dfa.next(state, w.letter_at(n as u64));
        if n >= start {
            let key = (state, (n - u) % v);
            if let Some(&first) = seen.get(&key) {
                let cycle = bits.split_off(first - 1);
                return UPSet::from_sequence(bits, cycle);
            }
            seen.insert(key, n);
        }
        bits.push(dfa.is_accepting(state));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::lang::{compile, parse};

    fn dfa(text: &str) -> Dfa {
        let sigma = Arc::new(Alphabet::new(["a", "b"]).unwrap());
        compile(&parse(text, &sigma).unwrap(), &sigma)
    }

    #[test]
    fn canonical_form() {
        let s = UPSet::from_sequence(vec![false, true, false, true], vec![false, true, false, true]);
        assert_eq!(s.threshold(), 1);
        assert_eq!(s.period(), 2);
        assert_eq!(s, UPSet::from_sequence(vec![], vec![false, true]));
        assert!(UPSet::from_sequence(vec![true, true], vec![false]).contains(2));
        assert_eq!(UPSet::from_sequence(vec![true, true], vec![false]).threshold(), 3);
    }

    #[test]
    fn length_sets() {
        let even = length_set(&dfa("mod(a,2,{0})"));
        assert_eq!(even, UPSet::from_sequence(vec![], vec![false, true]));
        assert_eq!(length_set(&dfa("a*ba*")), UPSet::all());
        assert!(length_set(&dfa("a & b")).is_empty());
        assert_eq!(length_set(&dfa("aaa | b")).min(), Some(1));
    }

    #[test]
    fn prefix_membership_examples() {
        let w = UPWord::new(vec![0, 1], vec![0]).unwrap();
        let s = prefix_membership(&dfa("a*ba*"), &w);
        // oracle: run the automaton on each explicit prefix
        let d = dfa("a*ba*");
        for k in 1..=10 {
            assert_eq!(s.contains(k), d.accepts(&w.prefix_of_length(k)));
        }
        assert_eq!(s, UPSet::from_sequence(vec![false], vec![true]));

        let aw = UPWord::constant(0);
        assert_eq!(prefix_membership(&dfa("mod(a,2,{0})"), &aw), UPSet::from_sequence(vec![], vec![false, true]));
        assert!(prefix_membership(&dfa("a&b"), &aw).is_empty());
    }

    #[test]
    fn upword_positions() {
        let w = UPWord::new(vec![0, 1], vec![0, 1, 1]).unwrap();
        let expected = [0, 1, 0, 1, 1, 0, 1, 1];
        for (i, &l) in expected.iter().enumerate() {
            assert_eq!(w.letter_at(i as u64 + 1), l);
        }
        assert!(UPWord::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn set_algebra() {
        let twos = UPSet::from_sequence(vec![], vec![false, true]);
        let threes = UPSet::from_sequence(vec![], vec![false, false, true]);
        let sixes = twos.intersection(&threes);
        assert_eq!(sixes.period(), 6);
        assert!(sixes.contains(12) && !sixes.contains(4));
        assert!(twos.union(&threes).contains(9));
    }
}
