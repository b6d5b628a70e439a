//! Thompson-style NFA construction and subset construction.

use std::collections::HashMap;

use super::table::Table;
use super::Letter;

#[derive(Debug, Default, Clone)]
struct State {
    eps: Vec<usize>,
    moves: Vec<(Letter, usize)>,
}

/// An ε-NFA with a single start and a single accepting state.
#[derive(Debug, Clone)]
pub(crate) struct Nfa {
    letters: usize,
    states: Vec<State>,
}

/// A sub-automaton with one entry and one exit state.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Fragment {
    pub start: usize,
    pub accept: usize,
}

impl Nfa {
    pub fn new(letters: usize) -> Self {
        Nfa {
            letters,
            states: Vec::new(),
        }
    }

    fn add(&mut self) -> usize {
        self.states.push(State::default());
        self.states.len() - 1
    }

    fn eps(&mut self, from: usize, to: usize) {
        self.states[from].eps.push(to);
    }

    pub fn letters_fragment(&mut self, letters: impl IntoIterator<Item = Letter>) -> Fragment {
        let start = self.add();
        let accept = self.add();
        for l in letters {
            self.states[start].moves.push((l, accept));
        }
        Fragment { start, accept }
    }

    pub fn epsilon(&mut self) -> Fragment {
        let start = self.add();
        let accept = self.add();
        self.eps(start, accept);
        Fragment { start, accept }
    }

    pub fn concat(&mut self, a: Fragment, b: Fragment) -> Fragment {
        self.eps(a.accept, b.start);
        Fragment {
            start: a.start,
            accept: b.accept,
        }
    }

    pub fn union(&mut self, a: Fragment, b: Fragment) -> Fragment {
        let start = self.add();
        let accept = self.add();
        self.eps(start, a.start);
        self.eps(start, b.start);
        self.eps(a.accept, accept);
        self.eps(b.accept, accept);
        Fragment { start, accept }
    }

    pub fn star(&mut self, a: Fragment) -> Fragment {
        let start = self.add();
        let accept = self.add();
        self.eps(start, a.start);
        self.eps(start, accept);
        self.eps(a.accept, a.start);
        self.eps(a.accept, accept);
        Fragment { start, accept }
    }

    pub fn plus(&mut self, a: Fragment) -> Fragment {
        let start = self.add();
        let accept = self.add();
        self.eps(start, a.start);
        self.eps(a.accept, a.start);
        self.eps(a.accept, accept);
        Fragment { start, accept }
    }

    /// Copies a complete table into the NFA as a fragment.
    pub fn embed(&mut self, table: &Table) -> Fragment {
        let base = self.states.len();
        for _ in 0..table.states() {
            self.add();
        }
        for s in 0..table.states() {
            for l in 0..table.letters {
                self.states[base + s].moves.push((l, base + table.next(s, l)));
            }
        }
        let start = self.add();
        let accept = self.add();
        self.eps(start, base + table.initial);
        for s in 0..table.states() {
            if table.accepting[s] {
                self.eps(base + s, accept);
            }
        }
        Fragment { start, accept }
    }

    fn closure(&self, set: &mut Vec<usize>) {
        let mut seen = vec![false; self.states.len()];
        let mut stack: Vec<usize> = set.clone();
        for &s in set.iter() {
            seen[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &t in &self.states[s].eps {
                if !seen[t] {
                    seen[t] = true;
                    set.push(t);
                    stack.push(t);
                }
            }
        }
        set.sort_unstable();
    }

    /// Subset construction restricted to reachable subsets. The empty subset,
    /// when reached, becomes the rejecting sink.
    pub fn determinize(&self, frag: Fragment) -> Table {
        let mut start = vec![frag.start];
        self.closure(&mut start);
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut subsets = vec![start.clone()];
        index.insert(start, 0);
        let mut trans = Vec::new();
        let mut i = 0;
        while i < subsets.len() {
            for l in 0..self.letters {
                let mut next: Vec<usize> = Vec::new();
                for &s in &subsets[i] {
                    for &(m, t) in &self.states[s].moves {
                        if m == l {
                            next.push(t);
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                self.closure(&mut next);
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        subsets.push(next.clone());
                        index.insert(next, subsets.len() - 1);
                        subsets.len() - 1
                    }
                };
                trans.push(id);
            }
            i += 1;
        }
        let accepting = subsets
            .iter()
            .map(|set| set.binary_search(&frag.accept).is_ok())
            .collect();
        Table {
            letters: self.letters,
            trans,
            accepting,
            initial: 0,
        }
    }
}
