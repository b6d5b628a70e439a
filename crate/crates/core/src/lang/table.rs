//! Raw complete transition tables, shared by the DFA operations and by other
//! modules that need partition refinement over small deterministic systems.

use std::collections::{HashMap, VecDeque};

/// A complete deterministic transition table over `letters` symbols. Unlike
/// [`super::Dfa`] it may accept the empty word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Table {
    pub letters: usize,
    pub trans: Vec<usize>,
    pub accepting: Vec<bool>,
    pub initial: usize,
}

impl Table {
    pub fn states(&self) -> usize {
        self.accepting.len()
    }

    #[inline]
    pub fn next(&self, state: usize, letter: usize) -> usize {
        self.trans[state * self.letters + letter]
    }

    /// Product over reachable pairs; acceptance combined with `op`.
    pub fn product(&self, other: &Table, op: impl Fn(bool, bool) -> bool) -> Table {
        debug_assert_eq!(self.letters, other.letters);
        let k = self.letters;
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(self.initial, other.initial)];
        index.insert(pairs[0], 0);
        let mut trans = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (p, q) = pairs[i];
            for l in 0..k {
                let succ = (self.next(p, l), other.next(q, l));
                let id = *index.entry(succ).or_insert_with(|| {
                    pairs.push(succ);
                    pairs.len() - 1
                });
                trans.push(id);
            }
            i += 1;
        }
        let accepting = pairs
            .iter()
            .map(|&(p, q)| op(self.accepting[p], other.accepting[q]))
            .collect();
        Table {
            letters: k,
            trans,
            accepting,
            initial: 0,
        }
    }

    /// Complement relative to Σ*.
    pub fn flip(&self) -> Table {
        let mut t = self.clone();
        t.accepting.iter_mut().for_each(|a| *a = !*a);
        t
    }

    /// Removes the empty word from the language, adding a fresh initial state
    /// when the old one is re-entered by some transition.
    pub fn without_empty_word(mut self) -> Table {
        if !self.accepting[self.initial] {
            return self;
        }
        let init = self.initial;
        let re_entered = self.trans.contains(&init);
        if re_entered {
            let fresh = self.states();
            let row: Vec<usize> = (0..self.letters).map(|l| self.next(init, l)).collect();
            self.trans.extend(row);
            self.accepting.push(false);
            self.initial = fresh;
        } else {
            self.accepting[init] = false;
        }
        self
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for l in 0..self.letters {
                let t = self.next(s, l);
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Minimal equivalent table, states numbered in breadth-first order from
    /// the initial state (letters in order). Two tables with the same language
    /// minimize to identical values.
    pub fn minimize(&self) -> Table {
        let alive = self.reachable();
        let classes = refine_partition(self.letters, &self.trans, &alive, |s| self.accepting[s] as usize);
        let blocks = classes.iter().filter_map(|c| *c).max().map_or(0, |m| m + 1);
        let mut rep = vec![usize::MAX; blocks];
        for (s, c) in classes.iter().enumerate() {
            if let Some(c) = *c {
                if rep[c] == usize::MAX {
                    rep[c] = s;
                }
            }
        }
        let quotient_next = |block: usize, l: usize| classes[self.next(rep[block], l)].unwrap();
        let start = classes[self.initial].unwrap();
        canonical(self.letters, start, blocks, quotient_next, |b| self.accepting[rep[b]])
    }
}

/// Renumbers a deterministic system in breadth-first order from `start`.
pub(crate) fn canonical(
    letters: usize,
    start: usize,
    states: usize,
    next: impl Fn(usize, usize) -> usize,
    accepting: impl Fn(usize) -> bool,
) -> Table {
    let mut number = vec![usize::MAX; states];
    let mut order = vec![start];
    number[start] = 0;
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        for l in 0..letters {
            let t = next(s, l);
            if number[t] == usize::MAX {
                number[t] = order.len();
                order.push(t);
            }
        }
        i += 1;
    }
    let mut trans = Vec::with_capacity(order.len() * letters);
    for &s in &order {
        for l in 0..letters {
            trans.push(number[next(s, l)]);
        }
    }
    Table {
        letters,
        trans,
        accepting: order.iter().map(|&s| accepting(s)).collect(),
        initial: 0,
    }
}

/// Hopcroft partition refinement. `trans` is a complete table
/// (`trans[s * letters + l]`); only states with `alive[s]` participate and
/// must be closed under transitions. The initial partition groups states by
/// `color`. Returns the block of every live state.
pub(crate) fn refine_partition(
    letters: usize,
    trans: &[usize],
    alive: &[bool],
    color: impl Fn(usize) -> usize,
) -> Vec<Option<usize>> {
    let n = alive.len();
    let mut inverse: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; letters];
    for s in (0..n).filter(|&s| alive[s]) {
        for l in 0..letters {
            inverse[l][trans[s * letters + l]].push(s);
        }
    }

    let mut block_of: Vec<Option<usize>> = vec![None; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut by_color: HashMap<usize, usize> = HashMap::new();
    for s in (0..n).filter(|&s| alive[s]) {
        let b = *by_color.entry(color(s)).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(s);
        block_of[s] = Some(b);
    }

    let mut pending: Vec<(usize, usize)> = Vec::new();
    let mut in_pending: Vec<Vec<bool>> = Vec::new();
    for b in 0..blocks.len() {
        in_pending.push(vec![true; letters]);
        for l in 0..letters {
            pending.push((b, l));
        }
    }

    let mut marked = vec![false; n];
    let mut count: Vec<usize> = vec![0; blocks.len()];
    while let Some((splitter, l)) = pending.pop() {
        in_pending[splitter][l] = false;
        let mut preimage = Vec::new();
        for &t in &blocks[splitter] {
            for &p in &inverse[l][t] {
                if !marked[p] {
                    marked[p] = true;
                    preimage.push(p);
                }
            }
        }
        let mut touched = Vec::new();
        for &p in &preimage {
            let b = block_of[p].unwrap();
            if count[b] == 0 {
                touched.push(b);
            }
            count[b] += 1;
        }
        for b in touched {
            let hit = count[b];
            count[b] = 0;
            if hit == blocks[b].len() {
                continue;
            }
            let (inside, outside): (Vec<usize>, Vec<usize>) = blocks[b].iter().partition(|&&s| marked[s]);
            let fresh = blocks.len();
            for &s in &inside {
                block_of[s] = Some(fresh);
            }
            blocks[b] = outside;
            blocks.push(inside);
            count.push(0);
            in_pending.push(vec![false; letters]);
            for c in 0..letters {
                if in_pending[b][c] {
                    in_pending[fresh][c] = true;
                    pending.push((fresh, c));
                } else {
                    let smaller = if blocks[fresh].len() <= blocks[b].len() { fresh } else { b };
                    in_pending[smaller][c] = true;
                    pending.push((smaller, c));
                }
            }
        }
        for p in preimage {
            marked[p] = false;
        }
    }
    block_of
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Moore-style refinement used as a cross-check.
    fn moore(t: &Table) -> usize {
        let alive = t.reachable();
        let live: Vec<usize> = (0..t.states()).filter(|&s| alive[s]).collect();
        let mut class: HashMap<usize, usize> = live.iter().map(|&s| (s, t.accepting[s] as usize)).collect();
        loop {
            let mut sig: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next_class = HashMap::new();
            for &s in &live {
                let mut key = vec![class[&s]];
                key.extend((0..t.letters).map(|l| class[&t.next(s, l)]));
                let n = sig.len();
                next_class.insert(s, *sig.entry(key).or_insert(n));
            }
            let before = class.values().collect::<std::collections::HashSet<_>>().len();
            class = next_class;
            if sig.len() == before {
                return sig.len();
            }
        }
    }

    #[test]
    fn hopcroft_matches_moore_on_pseudorandom_tables() {
        let mut seed = 0x2545_f491_4f6c_dd1d_u64;
        let mut rnd = |m: usize| {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % m as u64) as usize
        };
        for _ in 0..300 {
            let n = 1 + rnd(9);
            let k = 1 + rnd(3);
            let t = Table {
                letters: k,
                trans: (0..n * k).map(|_| rnd(n)).collect(),
                accepting: (0..n).map(|_| rnd(2) == 1).collect(),
                initial: rnd(n),
            };
            let m = t.minimize();
            assert_eq!(m.states(), moore(&t));
            assert_eq!(m.minimize(), m);
        }
    }

    #[test]
    fn empty_word_removal_keeps_other_words() {
        // (aa)* over {a}: one accepting state re-entered after two letters.
        let t = Table {
            letters: 1,
            trans: vec![1, 0],
            accepting: vec![true, false],
            initial: 0,
        };
        let t = t.without_empty_word();
        let run = |n: usize| {
            let mut s = t.initial;
            for _ in 0..n {
                s = t.next(s, 0);
            }
            t.accepting[s]
        };
        assert!(!run(0));
        assert!(run(2) && run(4) && !run(3));
    }
}
