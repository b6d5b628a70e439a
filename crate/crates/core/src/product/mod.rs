//! The deterministic safety automaton `B` over tuple letters `Σ^m`: one
//! component DFA per tree edge, coordinate `i` of a letter played by internal
//! node `n_i`. A state is accepting when no root-to-leaf path ending in an
//! unsafe leaf has all its components accepting.

mod compose;
pub mod lasso;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::lang::{Alphabet, Letter, StateId, UPWord};
use crate::unfolding::{escape, UnfoldingTree};

use lasso::{find_safe_lasso, SafetyAutomaton, SearchStats};

pub type TupleLetter = Vec<Letter>;

/// Component states, one per tree edge in edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductState(pub Vec<StateId>);

/// `stem · cycle^ω` over tuple letters. The state after `stem` equals the
/// state after `stem · cycle`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<TupleLetter>,
    pub cycle: Vec<TupleLetter>,
}

impl Lasso {
    /// Tuple letter at 1-based position `k`.
    pub fn letter_at(&self, k: usize) -> &TupleLetter {
        assert!(k >= 1);
        if k <= self.stem.len() {
            &self.stem[k - 1]
        } else {
            &self.cycle[(k - self.stem.len() - 1) % self.cycle.len()]
        }
    }

    /// Runs `B` over the stem and two cycle repetitions: every state after
    /// the first letter satisfies the acceptance formula, and the cycle
    /// returns to the state reached after the stem.
    pub fn is_accepted(&self, tree: &UnfoldingTree) -> bool {
        let m = tree.num_internal();
        if self.stem.is_empty() || self.cycle.is_empty() {
            return false;
        }
        if self.stem.iter().chain(&self.cycle).any(|a| a.len() != m) {
            return false;
        }
        if m == 0 {
            return tree.is_safe_vertex(tree.label(tree.root()));
        }
        let mut q = initial_state(tree);
        for a in &self.stem {
            q = step(tree, &q, a);
            if !phi_eval(tree, &q) {
                return false;
            }
        }
        let anchor = q.clone();
        for rep in 0..2 {
            for a in &self.cycle {
                q = step(tree, &q, a);
                if !phi_eval(tree, &q) {
                    return false;
                }
            }
            if rep == 0 && q != anchor {
                return false;
            }
        }
        true
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        let show = |w: &[TupleLetter]| w.iter().map(|a| render_tuple(a, alphabet)).collect::<Vec<_>>().join(" ");
        format!("{} ({})^ω", show(&self.stem), show(&self.cycle))
    }
}

pub fn render_tuple(a: &[Letter], alphabet: &Alphabet) -> String {
    let parts: Vec<&str> = a.iter().map(|&l| alphabet.name(l)).collect();
    format!("({})", parts.join(","))
}

pub fn initial_state(tree: &UnfoldingTree) -> ProductState {
    ProductState(tree.edges().iter().map(|e| e.dfa.initial()).collect())
}

/// Component `s` reads the letter of the source node of edge `s`.
pub fn step(tree: &UnfoldingTree, q: &ProductState, a: &[Letter]) -> ProductState {
    assert_eq!(a.len(), tree.num_internal(), "tuple letter has wrong arity");
    ProductState(
        tree.edges()
            .iter()
            .zip(&q.0)
            .map(|(e, &s)| e.dfa.next(s, a[e.source_index]))
            .collect(),
    )
}

/// The acceptance formula: every path whose edge components all accept
/// ends in a safe leaf.
pub fn phi_eval(tree: &UnfoldingTree, q: &ProductState) -> bool {
    // edges are numbered breadth-first, so parents are settled first
    let mut full = vec![false; tree.num_nodes()];
    full[tree.root()] = true;
    for (s, e) in tree.edges().iter().enumerate() {
        full[e.target] = full[e.source] && e.dfa.is_accepting(q.0[s]);
        if full[e.target] && tree.is_unsafe_leaf(e.target) {
            return false;
        }
    }
    true
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProductError {
    #[error("|Σ|^m = {letters} tuple letters exceeds the cap of {cap}")]
    TooManyLetters { letters: u128, cap: u64 },
    #[error("state budget of {cap} exceeded")]
    StateBudget { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Explicit when the tuple alphabet is within `max_letters`, falling back
    /// to the compositional check when the state budget runs out.
    Auto,
    /// Greatest fixpoint on `B` with all tuple letters; the certificate is
    /// the lexicographically least lasso.
    Explicit,
    /// Bottom-up bit automata over the tree; exact, with a certificate that
    /// need not be lexicographically least.
    Compositional,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub route: Route,
    pub max_letters: u64,
    pub max_states: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            route: Route::Auto,
            max_letters: 4096,
            max_states: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub lasso: Option<Lasso>,
    /// `Explicit` or `Compositional`; `Auto` for trees without internal nodes.
    pub route: Route,
    pub stats: SearchStats,
}

impl SolveReport {
    pub fn winnable(&self) -> bool {
        self.lasso.is_some()
    }
}

fn tuple_letter_count(tree: &UnfoldingTree) -> u128 {
    let sigma = tree.alphabet_len() as u128;
    let mut total: u128 = 1;
    for _ in 0..tree.num_internal() {
        total = total.saturating_mul(sigma);
    }
    total
}

/// The automaton `B` with tuple letters enumerated in lexicographic order
/// (coordinate `n_0` most significant, letters in declaration order).
pub struct ProductAutomaton<'a> {
    tree: &'a UnfoldingTree,
    letters: usize,
}

impl<'a> ProductAutomaton<'a> {
    pub fn new(tree: &'a UnfoldingTree, max_letters: u64) -> Result<Self, ProductError> {
        let count = tuple_letter_count(tree);
        if count > max_letters as u128 {
            return Err(ProductError::TooManyLetters {
                letters: count,
                cap: max_letters,
            });
        }
        Ok(ProductAutomaton {
            tree,
            letters: count as usize,
        })
    }

    pub fn decode(&self, mut index: usize) -> TupleLetter {
        let sigma = self.tree.alphabet_len();
        let mut a = vec![0; self.tree.num_internal()];
        for slot in a.iter_mut().rev() {
            *slot = index % sigma;
            index /= sigma;
        }
        a
    }
}

impl SafetyAutomaton for ProductAutomaton<'_> {
    type State = ProductState;

    fn initial(&self) -> ProductState {
        initial_state(self.tree)
    }

    fn num_letters(&self) -> usize {
        self.letters
    }

    fn step(&self, q: &ProductState, letter: usize) -> ProductState {
        step(self.tree, q, &self.decode(letter))
    }

    fn is_safe(&self, q: &ProductState) -> bool {
        phi_eval(self.tree, q)
    }
}

/// Decides nonemptiness of `B` and returns an accepted lasso when there is one.
pub fn solve(tree: &UnfoldingTree, options: &SolveOptions) -> Result<SolveReport, ProductError> {
    if tree.num_internal() == 0 {
        let lasso = tree.is_safe_vertex(tree.label(tree.root())).then(|| Lasso {
            stem: vec![vec![]],
            cycle: vec![vec![]],
        });
        return Ok(SolveReport {
            lasso,
            route: Route::Auto,
            stats: SearchStats::default(),
        });
    }
    match options.route {
        Route::Explicit => solve_explicit(tree, options),
        Route::Compositional => solve_compositional(tree, options),
        Route::Auto => {
            if tuple_letter_count(tree) > options.max_letters as u128 {
                return solve_compositional(tree, options);
            }
            match solve_explicit(tree, options) {
                Err(ProductError::StateBudget { .. }) => solve_compositional(tree, options),
                other => other,
            }
        }
    }
}

fn solve_explicit(tree: &UnfoldingTree, options: &SolveOptions) -> Result<SolveReport, ProductError> {
    let aut = ProductAutomaton::new(tree, options.max_letters)?;
    let (found, stats) =
        find_safe_lasso(&aut, options.max_states).map_err(|e| ProductError::StateBudget { cap: e.cap })?;
    let lasso = found.map(|l| Lasso {
        stem: l.stem.iter().map(|&i| aut.decode(i)).collect(),
        cycle: l.cycle.iter().map(|&i| aut.decode(i)).collect(),
    });
    Ok(SolveReport {
        lasso,
        route: Route::Explicit,
        stats,
    })
}

fn solve_compositional(tree: &UnfoldingTree, options: &SolveOptions) -> Result<SolveReport, ProductError> {
    let mut c = compose::Compositional::new(tree, tree.alphabet_len(), options.max_states);
    let words = c.solve()?;
    let lasso = words.map(|w| lasso_from_words(tree, &w));
    if let Some(l) = &lasso {
        assert!(l.is_accepted(tree), "compositional certificate rejected by the product automaton");
    }
    Ok(SolveReport {
        lasso,
        route: Route::Compositional,
        stats: c.stats,
    })
}

/// Packs per-node words (indexed by internal node) into a lasso of `B`: the
/// run along the tuple word is followed until (state, phase) repeats.
pub fn lasso_from_words(tree: &UnfoldingTree, words: &[UPWord]) -> Lasso {
    assert_eq!(words.len(), tree.num_internal());
    let stem_len = words.iter().map(|w| w.prefix().len()).max().unwrap_or(0).max(1);
    let period = words
        .iter()
        .fold(1usize, |acc, w| num_integer::lcm(acc, w.period().len()));
    let tuple = |k: usize| -> TupleLetter { words.iter().map(|w| w.letter_at(k as u64)).collect() };
    let mut seen: HashMap<(ProductState, usize), usize> = HashMap::new();
    let mut q = initial_state(tree);
    let mut letters = Vec::new();
    for k in 1.. {
        let a = tuple(k);
        q = step(tree, &q, &a);
        letters.push(a);
        if k >= stem_len {
            let key = (q.clone(), (k - stem_len) % period);
            if let Some(&first) = seen.get(&key) {
                let cycle = letters.split_off(first);
                return Lasso { stem: letters, cycle };
            }
            seen.insert(key, k);
        }
    }
    unreachable!()
}

/// DOT rendering of the part of `B` explored from the initial state through
/// accepting states, up to `cap` states. Accepting states are filled.
pub fn product_dot(
    tree: &UnfoldingTree,
    alphabet: &Alphabet,
    max_letters: u64,
    cap: usize,
) -> Result<String, ProductError> {
    let aut = ProductAutomaton::new(tree, max_letters)?;
    let mut ids: HashMap<ProductState, usize> = HashMap::new();
    let mut states = vec![aut.initial()];
    ids.insert(states[0].clone(), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut truncated = false;
    while let Some(s) = queue.pop_front() {
        if s != 0 && !aut.is_safe(&states[s]) {
            continue;
        }
        for a in 0..aut.num_letters() {
            let t = aut.step(&states[s], a);
            let id = match ids.get(&t) {
                Some(&id) => id,
                None if states.len() >= cap => {
                    truncated = true;
                    continue;
                }
                None => {
                    let id = states.len();
                    ids.insert(t.clone(), id);
                    states.push(t);
                    queue.push_back(id);
                    id
                }
            };
            edges.entry((s, id)).or_default().push(a);
        }
    }

    let mut out = String::from("digraph product {\n  rankdir=LR;\n  init [shape=point];\n  init -> q0;\n");
    for (i, q) in states.iter().enumerate() {
        let label = q.0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        let style = if aut.is_safe(q) { ", style=filled, fillcolor=lightblue" } else { "" };
        let _ = writeln!(out, "  q{i} [label=\"({label})\"{style}];");
    }
    for ((s, t), letters) in &edges {
        let mut shown: Vec<String> = letters.iter().take(3).map(|&a| render_tuple(&aut.decode(a), alphabet)).collect();
        if letters.len() > 3 {
            shown.push(format!("… {} letters", letters.len()));
        }
        let _ = writeln!(out, "  q{s} -> q{t} [label=\"{}\"];", escape(&shown.join(" ")));
    }
    if truncated {
        let _ = writeln!(out, "  truncated [shape=plaintext, label=\"truncated at {cap} states\"];");
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests;
