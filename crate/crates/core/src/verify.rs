//! Oracles that check strategies independently of the solver: exact model
//! checking for one or all numbers of agents, a bounded brute-force search
//! for winning assignments on the unfolding, and play simulation.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;
use thiserror::Error;

use crate::arena::{Arena, SafetyGame, VertexId};
use crate::lang::{prefix_membership, Letter, UPSet};
use crate::synthesis::{Memory, MemoryStrategy};
use crate::unfolding::{escape, NodeKind, UnfoldingTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Safe,
    /// With `k` agents the strategy allows `play`, which ends unsafe.
    Unsafe { k: u64, play: Vec<VertexId> },
    /// A budget was hit before an answer was reached.
    Undecided { reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyStats {
    /// (memory, vertex) pairs visited, summed over all checked `k`.
    pub states_explored: usize,
    pub ks_checked: usize,
    /// For all-`k` checks: every `k ≥ threshold` behaves like
    /// `threshold + (k - threshold) mod period`.
    pub threshold: Option<u64>,
    pub period: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub stats: VerifyStats,
}

impl VerificationReport {
    pub fn is_safe(&self) -> bool {
        self.verdict == Verdict::Safe
    }

    pub fn to_json(&self, arena: &Arena) -> serde_json::Value {
        let mut v = match &self.verdict {
            Verdict::Safe => json!({ "verdict": "safe" }),
            Verdict::Unsafe { k, play } => json!({
                "verdict": "unsafe",
                "k": k,
                "play": play.iter().map(|&v| arena.name(v)).collect::<Vec<_>>(),
            }),
            Verdict::Undecided { reason } => json!({ "verdict": "undecided", "reason": reason }),
        };
        let obj = v.as_object_mut().unwrap();
        obj.insert("states_explored".into(), json!(self.stats.states_explored));
        obj.insert("ks_checked".into(), json!(self.stats.ks_checked));
        if let (Some(t), Some(p)) = (self.stats.threshold, self.stats.period) {
            obj.insert("threshold".into(), json!(t));
            obj.insert("period".into(), json!(p));
        }
        v
    }

    pub fn to_text(&self, arena: &Arena) -> String {
        let mut out = match &self.verdict {
            Verdict::Safe => "safe".to_string(),
            Verdict::Unsafe { k, play } => format!("unsafe for k = {k}: {}", render_play(arena, play)),
            Verdict::Undecided { reason } => format!("undecided: {reason}"),
        };
        let _ = write!(
            out,
            "\n{} (memory, vertex) states explored over {} value(s) of k",
            self.stats.states_explored, self.stats.ks_checked
        );
        if let (Some(t), Some(p)) = (self.stats.threshold, self.stats.period) {
            let _ = write!(out, "; behaviour is periodic from k = {t} with period {p}");
        }
        out
    }
}

pub fn render_play(arena: &Arena, play: &[VertexId]) -> String {
    play.iter().map(|&v| arena.name(v)).collect::<Vec<_>>().join(" ")
}

/// Breadth-first search over (memory, vertex) pairs where `moves(m, v, t)`
/// says whether the strategy's word at memory `m` can lead from `v` to `t`.
fn reachability(
    game: &SafetyGame,
    ms: &MemoryStrategy,
    mut moves: impl FnMut(Memory, VertexId, VertexId) -> bool,
) -> (Option<Vec<VertexId>>, usize) {
    let a = game.arena();
    let start = (ms.root(), a.initial());
    if !game.is_safe(start.1) {
        return (Some(vec![start.1]), 1);
    }
    let mut parent: HashMap<(Memory, VertexId), Option<(Memory, VertexId)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    let trace = |parent: &HashMap<_, Option<(Memory, VertexId)>>, mut cur: (Memory, VertexId)| {
        let mut play = vec![cur.1];
        while let Some(Some(p)) = parent.get(&cur) {
            play.push(p.1);
            cur = *p;
        }
        play.reverse();
        play
    };
    while let Some((m, v)) = queue.pop_front() {
        for (t, _) in a.out_edges(v) {
            if !moves(m, v, t) {
                continue;
            }
            let next = (ms.update(m, t), t);
            if parent.contains_key(&next) {
                continue;
            }
            parent.insert(next, Some((m, v)));
            if !game.is_safe(t) {
                let n = parent.len();
                return (Some(trace(&parent, next)), n);
            }
            queue.push_back(next);
        }
    }
    (None, parent.len())
}

/// Exact check of the plays with exactly `k` agents.
pub fn verify_fixed_k(game: &SafetyGame, ms: &MemoryStrategy, k: u64) -> VerificationReport {
    assert!(k >= 1, "at least one agent");
    let a = game.arena();
    let mut prefixes: HashMap<Memory, Vec<Letter>> = HashMap::new();
    let (play, explored) = reachability(game, ms, |m, v, t| {
        let word = prefixes
            .entry(m)
            .or_insert_with(|| ms.next(m).prefix_of_length(k));
        a.edge(v, t).unwrap().dfa.accepts(word)
    });
    VerificationReport {
        verdict: match play {
            Some(play) => Verdict::Unsafe { k, play },
            None => Verdict::Safe,
        },
        stats: VerifyStats {
            states_explored: explored,
            ks_checked: 1,
            threshold: None,
            period: None,
        },
    }
}

/// Exact check over every `k ≥ 1`.
///
/// For each reachable (memory, vertex, successor) the set of `k` taking the
/// step is ultimately periodic; past the largest threshold and modulo the
/// lcm of the periods all of them repeat, so finitely many representatives
/// decide every `k`. A period above `lcm_cap` gives `Undecided`.
pub fn verify_all_k(game: &SafetyGame, ms: &MemoryStrategy, lcm_cap: u64) -> VerificationReport {
    let a = game.arena();
    let mut sets: HashMap<(Memory, VertexId, VertexId), UPSet> = HashMap::new();
    // union over k of the reachable pairs
    let start = (ms.root(), a.initial());
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some((m, v)) = queue.pop_front() {
        if !game.is_safe(v) {
            continue;
        }
        let word = ms.next(m);
        for (t, e) in a.out_edges(v) {
            let set = prefix_membership(&e.dfa, &word);
            if set.is_empty() {
                continue;
            }
            sets.insert((m, v, t), set);
            let next = (ms.update(m, t), t);
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    let threshold = sets.values().map(|s| s.threshold()).max().unwrap_or(1);
    let mut period: u64 = 1;
    for s in sets.values() {
        period = num_integer::lcm(period, s.period());
        if period > lcm_cap {
            return VerificationReport {
                verdict: Verdict::Undecided {
                    reason: format!("period lcm exceeds the cap of {lcm_cap}"),
                },
                stats: VerifyStats {
                    states_explored: seen.len(),
                    ..VerifyStats::default()
                },
            };
        }
    }

    let mut stats = VerifyStats {
        states_explored: seen.len(),
        ks_checked: 0,
        threshold: Some(threshold),
        period: Some(period),
    };
    for k in 1..threshold + period {
        let (play, explored) = reachability(game, ms, |m, v, t| sets.get(&(m, v, t)).is_some_and(|s| s.contains(k)));
        stats.states_explored += explored;
        stats.ks_checked += 1;
        if let Some(play) = play {
            return VerificationReport {
                verdict: Verdict::Unsafe { k, play },
                stats,
            };
        }
    }
    VerificationReport {
        verdict: Verdict::Safe,
        stats,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BruteForceError {
    #[error("K = {0} is outside 1..=128")]
    BadBound(u64),
    #[error("search budget of {0} steps exceeded")]
    Budget(u64),
}

/// Bounded existence oracle: is there an assignment of length-`k_max` words
/// to the internal nodes of `tree` under which no play with `k ≤ k_max`
/// agents reaches an unsafe leaf? With `memoryless`, equilabelled nodes must
/// share one word.
///
/// Only the length-`k` prefixes with `k ≤ k_max` matter, so a word is
/// summarized by which of those prefixes each outgoing edge accepts; the
/// search enumerates these summaries per vertex, then backtracks over the
/// nodes in breadth-first order. `budget` bounds the total number of steps.
pub fn brute_force_exists(
    game: &SafetyGame,
    tree: &UnfoldingTree,
    k_max: u64,
    memoryless: bool,
    budget: u64,
) -> Result<bool, BruteForceError> {
    if k_max == 0 || k_max > 128 {
        return Err(BruteForceError::BadBound(k_max));
    }
    let mut spent = 0u64;
    let full: u128 = if k_max == 128 { u128::MAX } else { (1u128 << k_max) - 1 };
    if tree.num_internal() == 0 {
        return Ok(game.is_safe(tree.label(tree.root())));
    }

    let mut signatures: HashMap<VertexId, Vec<Vec<u128>>> = HashMap::new();
    for &n in tree.internal_nodes() {
        let v = tree.label(n);
        if let std::collections::hash_map::Entry::Vacant(e) = signatures.entry(v) {
            let s = edge_signatures(game, v, k_max, budget, &mut spent)?;
            e.insert(s);
        }
    }

    struct Search<'a> {
        tree: &'a UnfoldingTree,
        signatures: &'a HashMap<VertexId, Vec<Vec<u128>>>,
        memoryless: bool,
        reach: Vec<u128>,
        chosen: HashMap<VertexId, usize>,
        spent: u64,
        budget: u64,
    }

    impl Search<'_> {
        fn go(&mut self, i: usize) -> Result<bool, BruteForceError> {
            let internal = self.tree.internal_nodes();
            if i == internal.len() {
                return Ok(true);
            }
            let n = internal[i];
            let v = self.tree.label(n);
            let options = &self.signatures[&v];
            let fixed = if self.memoryless { self.chosen.get(&v).copied() } else { None };
            let candidates: Vec<usize> = match fixed {
                Some(c) => vec![c],
                // unreached nodes cannot lose, so any word will do
                None if self.reach[n] == 0 => vec![0],
                None => (0..options.len()).collect(),
            };
            for c in candidates {
                self.spent += 1;
                if self.spent > self.budget {
                    return Err(BruteForceError::Budget(self.budget));
                }
                let sig = &options[c];
                let children = &self.tree.node(n).children;
                let ok = children.iter().zip(sig).all(|(&ch, &bits)| {
                    !(self.tree.is_unsafe_leaf(ch) && self.reach[n] & bits != 0)
                });
                if !ok {
                    continue;
                }
                for (&ch, &bits) in children.iter().zip(sig) {
                    if self.tree.node(ch).kind == NodeKind::Internal {
                        self.reach[ch] = self.reach[n] & bits;
                    }
                }
                let newly = fixed.is_none() && self.memoryless;
                if newly {
                    self.chosen.insert(v, c);
                }
                if self.go(i + 1)? {
                    return Ok(true);
                }
                if newly {
                    self.chosen.remove(&v);
                }
            }
            Ok(false)
        }
    }

    let mut reach = vec![0u128; tree.num_nodes()];
    reach[tree.root()] = full;
    let mut search = Search {
        tree,
        signatures: &signatures,
        memoryless,
        reach,
        chosen: HashMap::new(),
        spent,
        budget,
    };
    search.go(0)
}

/// Distinct vectors (one bitmask per outgoing edge of `v`, bit `k - 1` set
/// when the edge accepts the length-`k` prefix) over all words of length
/// `k_max`.
fn edge_signatures(
    game: &SafetyGame,
    v: VertexId,
    k_max: u64,
    budget: u64,
    spent: &mut u64,
) -> Result<Vec<Vec<u128>>, BruteForceError> {
    let a = game.arena();
    let dfas: Vec<_> = a.out_edges(v).map(|(_, e)| e.dfa.clone()).collect();
    let letters = a.alphabet().len();
    let mut layer: HashSet<(Vec<usize>, Vec<u128>)> =
        HashSet::from([(dfas.iter().map(|d| d.initial()).collect(), vec![0; dfas.len()])]);
    for depth in 0..k_max {
        let mut next = HashSet::new();
        for (states, sig) in &layer {
            for x in 0..letters {
                *spent += 1;
                if *spent > budget {
                    return Err(BruteForceError::Budget(budget));
                }
                let st: Vec<usize> = states.iter().zip(&dfas).map(|(&q, d)| d.next(q, x)).collect();
                let sg: Vec<u128> = sig
                    .iter()
                    .zip(&st)
                    .zip(&dfas)
                    .map(|((&bits, &q), d)| bits | ((d.is_accepting(q) as u128) << depth))
                    .collect();
                next.insert((st, sg));
            }
        }
        layer = next;
    }
    let sigs: BTreeSet<Vec<u128>> = layer.into_iter().map(|(_, s)| s).collect();
    Ok(sigs.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolver {
    /// Uniformly among the possible successors, from the seed.
    Random,
    /// The first possible successor in declaration order.
    First,
    /// The possible successor with the lexicographically least name.
    Minimal,
}

impl std::str::FromStr for Resolver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Resolver::Random),
            "first" => Ok(Resolver::First),
            "minimal" => Ok(Resolver::Minimal),
            other => Err(format!("unknown resolver '{other}' (expected random, first or minimal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub vertices: Vec<VertexId>,
    /// `played[j]` is the length-`k` word chosen at `vertices[j]`.
    pub played: Vec<Vec<Letter>>,
    pub memory: Vec<Memory>,
}

/// A play prefix of `steps` vertices with `k` agents following `ms`.
pub fn simulate(
    game: &SafetyGame,
    ms: &MemoryStrategy,
    k: u64,
    steps: usize,
    seed: u64,
    resolver: Resolver,
) -> Trace {
    assert!(k >= 1 && steps >= 1);
    let a = game.arena();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut v = a.initial();
    let mut m = ms.root();
    let mut trace = Trace {
        vertices: vec![v],
        played: Vec::new(),
        memory: vec![m],
    };
    while trace.vertices.len() < steps {
        let word = ms.next(m).prefix_of_length(k);
        let succ = a.successors(v, &word);
        let t = match resolver {
            Resolver::First => succ[0],
            Resolver::Minimal => *succ.iter().min_by_key(|&&t| a.name(t)).unwrap(),
            Resolver::Random => succ[rng.gen_range(0..succ.len())],
        };
        trace.played.push(word);
        m = ms.update(m, t);
        v = t;
        trace.vertices.push(v);
        trace.memory.push(m);
    }
    trace
}

/// The arena in DOT with the steps of `play` drawn bold red and unsafe
/// vertices shaded.
pub fn play_dot(game: &SafetyGame, play: &[VertexId]) -> String {
    let a = game.arena();
    let used: HashSet<(VertexId, VertexId)> = play.windows(2).map(|p| (p[0], p[1])).collect();
    let mut out = String::from("digraph play {\n  rankdir=LR;\n");
    for v in a.vertices() {
        let style = if game.is_safe(v) { "" } else { ", style=filled, fillcolor=gray" };
        let _ = writeln!(out, "  v{v} [label=\"{}\"{style}];", escape(a.name(v)));
    }
    for (f, t, e) in a.edges() {
        let hl = if used.contains(&(f, t)) { ", color=red, penwidth=2" } else { "" };
        let _ = writeln!(out, "  v{f} -> v{t} [label=\"{}\"{hl}];", escape(&e.label));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::History;
    use crate::generators::{gen_example, gen_worstcase, Example};
    use crate::lang::UPWord;
    use crate::product::{solve, SolveOptions};
    use crate::synthesis::{build_memory, extract_strategy};
    use crate::unfolding::unfold;

    const CAP: u64 = 1 << 20;

    fn synthesize(game: &SafetyGame) -> MemoryStrategy {
        let tree = unfold(game);
        let lasso = solve(&tree, &SolveOptions::default()).unwrap().lasso.unwrap();
        build_memory(game, &tree, &extract_strategy(&tree, &lasso).unwrap())
    }

    fn memoryless(game: &SafetyGame, words: &[(&str, UPWord)]) -> MemoryStrategy {
        let a = game.arena();
        let map = words.iter().map(|(v, w)| (a.vertex(v).unwrap(), w.clone())).collect();
        MemoryStrategy::memoryless(game, &map)
    }

    #[test]
    fn fig2_synthesized_is_safe() {
        let g = gen_example(Example::Fig2);
        let ms = synthesize(&g);
        assert!(verify_fixed_k(&g, &ms, 1).is_safe());
        assert!(verify_fixed_k(&g, &ms, 2).is_safe());
        let all = verify_all_k(&g, &ms, CAP);
        assert!(all.is_safe(), "{:?}", all);
        // spot checks beyond the representatives
        let (t, p) = (all.stats.threshold.unwrap(), all.stats.period.unwrap());
        for k in (1..t + p).chain([50, 97, 128, 1000]) {
            assert!(verify_fixed_k(&g, &ms, k).is_safe(), "k = {k}");
        }
    }

    #[test]
    fn fig1_hand_strategy_is_safe() {
        let g = gen_example(Example::Fig1);
        let ms = MemoryStrategy::from_file(&crate::generators::fig1_hand_strategy(), &g).unwrap();
        assert!(verify_all_k(&g, &ms, CAP).is_safe());
        let even = simulate(&g, &ms, 4, 5, 0, Resolver::First);
        assert_eq!(render_play(g.arena(), &even.vertices), "v0 v1 v3 v5 v5");
        let odd = simulate(&g, &ms, 5, 5, 0, Resolver::First);
        assert_eq!(render_play(g.arena(), &odd.vertices), "v0 v2 v3 v5 v5");
    }

    #[test]
    fn fig2_memoryless_failures() {
        let g = gen_example(Example::Fig2);
        let a_everywhere = memoryless(&g, &[]);
        let r = verify_fixed_k(&g, &a_everywhere, 1);
        let Verdict::Unsafe { k, play } = &r.verdict else { panic!("{r:?}") };
        assert_eq!(*k, 1);
        assert_eq!(render_play(g.arena(), play), "v0 v2 v1 bot");

        let b_at_v1 = memoryless(&g, &[("v1", UPWord::constant(1))]);
        let r = verify_all_k(&g, &b_at_v1, CAP);
        assert!(matches!(r.verdict, Verdict::Unsafe { k: 2, .. }), "{r:?}");
        assert!(verify_fixed_k(&g, &b_at_v1, 1).is_safe());
    }

    #[test]
    fn unsafe_verdicts_carry_realizable_plays() {
        let g = gen_example(Example::Fig2);
        let ms = memoryless(&g, &[("v1", UPWord::constant(1))]);
        let Verdict::Unsafe { k, play } = verify_all_k(&g, &ms, CAP).verdict else { panic!() };
        let h = History::new(g.arena(), play.clone()).unwrap();
        assert!(g.arena().k_realizable(&h, k));
        assert!(!g.is_safe(*play.last().unwrap()));
        // the play follows the strategy
        for j in 0..play.len() - 1 {
            let prefix = History::new(g.arena(), play[..=j].to_vec()).unwrap();
            let w = ms.strategy_word(&prefix).prefix_of_length(k);
            assert!(g.arena().edge(play[j], play[j + 1]).unwrap().dfa.accepts(&w));
        }
    }

    #[test]
    fn all_safe_games_are_safe() {
        let mut file = crate::generators::example_file(Example::Fig1);
        file.safe = file.vertices.clone();
        let g = SafetyGame::from_file(&file).unwrap().normalize();
        let ms = memoryless(&g, &[]);
        assert!(verify_all_k(&g, &ms, CAP).is_safe());
        for k in 1..5 {
            assert!(verify_fixed_k(&g, &ms, k).is_safe());
        }
    }

    #[test]
    fn lcm_cap_gives_undecided() {
        let g = gen_worstcase(3).unwrap();
        let ms = synthesize(&g);
        let r = verify_all_k(&g, &ms, 4);
        assert!(matches!(r.verdict, Verdict::Undecided { .. }));
        assert!(verify_all_k(&g, &ms, CAP).is_safe());
    }

    #[test]
    fn brute_force_fig2() {
        let g = gen_example(Example::Fig2);
        let tree = unfold(&g);
        assert_eq!(brute_force_exists(&g, &tree, 2, false, 1_000_000), Ok(true));
        assert_eq!(brute_force_exists(&g, &tree, 2, true, 1_000_000), Ok(false));
        assert_eq!(brute_force_exists(&g, &tree, 1, true, 1_000_000), Ok(true));
        assert!(brute_force_exists(&g, &tree, 2, false, 3).is_err());
        assert!(brute_force_exists(&g, &tree, 0, false, 10).is_err());
    }

    #[test]
    fn brute_force_all_safe() {
        let mut file = crate::generators::example_file(Example::Fig2);
        file.default_target = Some(crate::arena::DefaultTarget::All("v2".into()));
        let g = SafetyGame::from_file(&file).unwrap().normalize();
        let tree = unfold(&g);
        assert_eq!(brute_force_exists(&g, &tree, 4, true, 1_000_000), Ok(true));
    }

    #[test]
    fn brute_force_worstcase_memoryless() {
        let g = gen_worstcase(2).unwrap();
        let tree = unfold(&g);
        assert_eq!(brute_force_exists(&g, &tree, 6, false, 10_000_000), Ok(true));
        assert_eq!(brute_force_exists(&g, &tree, 6, true, 10_000_000), Ok(false));
    }

    #[test]
    fn simulation() {
        let g = gen_example(Example::Fig1);
        let ms = synthesize(&g);
        let names = |t: &Trace| render_play(g.arena(), &t.vertices);
        let even = simulate(&g, &ms, 2, 10, 1, Resolver::Random);
        assert_eq!(even.vertices.len(), 10);
        assert!(names(&even).starts_with("v0 v1 v3 v5 v5"));
        let odd = simulate(&g, &ms, 3, 10, 1, Resolver::Random);
        assert!(names(&odd).starts_with("v0 v2 v3 v5"));
        for seed in 0..5 {
            assert_eq!(simulate(&g, &ms, 3, 10, seed, Resolver::First), odd);
        }
        // every step is k-realizable and follows the played word
        let h = History::new(g.arena(), odd.vertices.clone()).unwrap();
        assert!(g.arena().k_realizable(&h, 3));
        for (j, w) in odd.played.iter().enumerate() {
            assert_eq!(w.len(), 3);
            assert!(g.arena().edge(odd.vertices[j], odd.vertices[j + 1]).unwrap().dfa.accepts(w));
        }
        assert_eq!(simulate(&g, &ms, 2, 1, 0, Resolver::Minimal).vertices.len(), 1);
    }

    #[test]
    fn report_rendering() {
        let g = gen_example(Example::Fig2);
        let r = verify_fixed_k(&g, &memoryless(&g, &[]), 1);
        let j = r.to_json(g.arena());
        assert_eq!(j["verdict"], "unsafe");
        assert_eq!(j["k"], 1);
        assert!(r.to_text(g.arena()).starts_with("unsafe for k = 1"));
        let Verdict::Unsafe { play, .. } = &r.verdict else { panic!() };
        assert!(play_dot(&g, play).contains("color=red"));
    }
}
