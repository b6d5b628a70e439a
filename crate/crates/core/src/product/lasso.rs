//! Nonemptiness of deterministic safety automata by greatest fixpoint, with
//! extraction of the lexicographically least lasso.

use std::collections::HashMap;
use std::hash::Hash;

/// A deterministic automaton with letters `0..num_letters()`, where the
/// letter index order is the tie-breaking order. A run is accepted when every
/// state after the first letter is safe.
pub trait SafetyAutomaton {
    type State: Clone + Eq + Hash;

    fn initial(&self) -> Self::State;
    fn num_letters(&self) -> usize;
    fn step(&self, q: &Self::State, letter: usize) -> Self::State;
    fn is_safe(&self, q: &Self::State) -> bool;
}

/// Letter indices of an accepted ultimately periodic word. `stem` holds at
/// least one letter; the state reached after `stem` equals the state reached
/// after `stem · cycle`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexLasso {
    pub stem: Vec<usize>,
    pub cycle: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// States stored during exploration (the initial state and safe states).
    pub explored: usize,
    /// States left in the greatest fixpoint.
    pub surviving: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateBudgetExceeded {
    pub cap: usize,
}

/// Decides whether some infinite word keeps the automaton safe at every
/// position `k ≥ 1`, and returns the lasso built from least viable letters.
///
/// Explores the states reachable through safe states, prunes states without
/// a successor inside the candidate set until stable, then follows least
/// letters that stay inside the fixpoint until a state repeats.
pub fn find_safe_lasso<A: SafetyAutomaton>(
    aut: &A,
    max_states: usize,
) -> Result<(Option<IndexLasso>, SearchStats), StateBudgetExceeded> {
    let letters = aut.num_letters();
    let mut ids: HashMap<A::State, usize> = HashMap::new();
    let mut states: Vec<A::State> = Vec::new();
    let mut safe: Vec<bool> = Vec::new();
    // successors of each explored state that are safe, in letter order
    let mut succ: Vec<Vec<(u32, u32)>> = Vec::new();

    let q0 = aut.initial();
    ids.insert(q0.clone(), 0);
    safe.push(aut.is_safe(&q0));
    states.push(q0);
    let mut next = 0;
    while next < states.len() {
        let q = states[next].clone();
        let mut out = Vec::new();
        for a in 0..letters {
            let t = aut.step(&q, a);
            let id = match ids.get(&t) {
                Some(&id) => id,
                None => {
                    if !aut.is_safe(&t) {
                        continue;
                    }
                    if states.len() >= max_states {
                        return Err(StateBudgetExceeded { cap: max_states });
                    }
                    let id = states.len();
                    ids.insert(t.clone(), id);
                    states.push(t);
                    safe.push(true);
                    id
                }
            };
            if safe[id] {
                out.push((a as u32, id as u32));
            }
        }
        succ.push(out);
        next += 1;
    }

    let n = states.len();
    let mut alive = safe.clone();
    let mut count = vec![0usize; n];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, out) in succ.iter().enumerate() {
        for &(_, t) in out {
            preds[t as usize].push(s as u32);
            if alive[t as usize] {
                count[s] += 1;
            }
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&s| alive[s] && count[s] == 0).collect();
    for &s in &queue {
        alive[s] = false;
    }
    while let Some(t) = queue.pop() {
        for &p in &preds[t] {
            let p = p as usize;
            count[p] -= 1;
            if alive[p] && count[p] == 0 {
                alive[p] = false;
                queue.push(p);
            }
        }
    }
    let stats = SearchStats {
        explored: n,
        surviving: alive.iter().filter(|&&b| b).count(),
    };

    let least = |s: usize| succ[s].iter().find(|&&(_, t)| alive[t as usize]).copied();
    let Some((a0, first)) = least(0) else {
        return Ok((None, stats));
    };
    let mut word = vec![a0 as usize];
    // position in `word` after which each state was reached
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut cur = first as usize;
    seen.insert(cur, 1);
    loop {
        let (a, t) = least(cur).expect("states in the fixpoint have a successor inside it");
        word.push(a as usize);
        cur = t as usize;
        if let Some(&at) = seen.get(&cur) {
            let cycle = word.split_off(at);
            return Ok((Some(IndexLasso { stem: word, cycle }), stats));
        }
        seen.insert(cur, word.len());
    }
}

/// Runs `lasso` from the initial state over the stem and two cycle
/// repetitions; true when every state after the first letter is safe and the
/// cycle closes.
pub fn lasso_is_safe<A: SafetyAutomaton>(aut: &A, lasso: &IndexLasso) -> bool {
    if lasso.stem.is_empty() || lasso.cycle.is_empty() {
        return false;
    }
    let mut q = aut.initial();
    for &a in &lasso.stem {
        q = aut.step(&q, a);
        if !aut.is_safe(&q) {
            return false;
        }
    }
    let anchor = q.clone();
    for rep in 0..2 {
        for &a in &lasso.cycle {
            q = aut.step(&q, a);
            if !aut.is_safe(&q) {
                return false;
            }
        }
        if rep == 0 && q != anchor {
            return false;
        }
    }
    true
}

/// A complete deterministic automaton given by tables.
#[derive(Debug, Clone)]
pub struct ExplicitSafetyAutomaton {
    pub letters: usize,
    pub trans: Vec<Vec<usize>>,
    pub initial: usize,
    pub safe: Vec<bool>,
}

impl SafetyAutomaton for ExplicitSafetyAutomaton {
    type State = usize;

    fn initial(&self) -> usize {
        self.initial
    }

    fn num_letters(&self) -> usize {
        self.letters
    }

    fn step(&self, q: &usize, letter: usize) -> usize {
        self.trans[*q][letter]
    }

    fn is_safe(&self, q: &usize) -> bool {
        self.safe[*q]
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Pigeonhole oracle: a safe run of length |Q| after the first letter
    /// repeats a state, so it extends to an infinite safe run.
    fn exists_safe_word(aut: &ExplicitSafetyAutomaton) -> bool {
        let n = aut.trans.len();
        let mut frontier: Vec<bool> = vec![false; n];
        for a in 0..aut.letters {
            let t = aut.trans[aut.initial][a];
            if aut.safe[t] {
                frontier[t] = true;
            }
        }
        for _ in 0..n {
            let mut next = vec![false; n];
            for s in (0..n).filter(|&s| frontier[s]) {
                for a in 0..aut.letters {
                    let t = aut.trans[s][a];
                    if aut.safe[t] {
                        next[t] = true;
                    }
                }
            }
            frontier = next;
        }
        frontier.iter().any(|&b| b)
    }

    pub(crate) fn arb_automaton() -> impl Strategy<Value = ExplicitSafetyAutomaton> {
        (1usize..=8, 1usize..=3).prop_flat_map(|(n, k)| {
            (
                proptest::collection::vec(proptest::collection::vec(0..n, k), n),
                0..n,
                proptest::collection::vec(proptest::bool::weighted(0.7), n),
            )
                .prop_map(move |(trans, initial, safe)| ExplicitSafetyAutomaton {
                    letters: k,
                    trans,
                    initial,
                    safe,
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn gfp_agrees_with_pigeonhole_search(aut in arb_automaton()) {
            let (lasso, _) = find_safe_lasso(&aut, 1000).unwrap();
            prop_assert_eq!(lasso.is_some(), exists_safe_word(&aut));
            if let Some(l) = lasso {
                prop_assert!(lasso_is_safe(&aut, &l));
            }
        }
    }

    #[test]
    fn initial_state_need_not_be_safe() {
        // 0 (unsafe) -a-> 1 -a-> 1
        let aut = ExplicitSafetyAutomaton {
            letters: 1,
            trans: vec![vec![1], vec![1]],
            initial: 0,
            safe: vec![false, true],
        };
        let (l, _) = find_safe_lasso(&aut, 10).unwrap();
        assert_eq!(l, Some(IndexLasso { stem: vec![0], cycle: vec![0] }));
    }

    #[test]
    fn least_letters_are_chosen() {
        // letter 0 leads to a dead end after one step, letter 1 loops
        let aut = ExplicitSafetyAutomaton {
            letters: 2,
            trans: vec![vec![1, 2], vec![3, 3], vec![2, 2], vec![3, 3]],
            initial: 0,
            safe: vec![true, true, true, false],
        };
        let (l, stats) = find_safe_lasso(&aut, 10).unwrap();
        assert_eq!(l, Some(IndexLasso { stem: vec![1], cycle: vec![0] }));
        assert_eq!(stats.surviving, 2);
        assert!(find_safe_lasso(&aut, 2).is_err());
    }
}
