//! Tree-compositional emptiness check for the product automaton.
//!
//! Node `n` of the unfolding is *reached at time k* when every edge on its
//! root path accepts the length-`k` prefix of its source's word; the
//! product's acceptance condition says no unsafe leaf is ever reached. For
//! each internal node we build, bottom-up, a deterministic automaton over
//! reach bits that accepts exactly the bit streams for which the subtree's
//! words can be chosen so that no unsafe leaf below is reached. It is the
//! subset construction of the subtree's product with the node's own letter
//! projected away; acceptance is "never empty", which is exact for safety
//! languages by König's lemma. Extraction runs top-down: the root reads
//! `1^ω`, and every node's lasso determines its children's bit streams.

use std::collections::HashMap;
use std::sync::Arc;

use crate::lang::table::Table;
use crate::lang::{Letter, UPWord};
use crate::unfolding::{NodeId, NodeKind, UnfoldingTree};

use super::lasso::{find_safe_lasso, SafetyAutomaton, SearchStats};
use super::ProductError;

/// Product of the DFAs on the outgoing edges of one internal node; all of
/// them read the node's own word.
struct LocalAutomaton {
    next: Vec<Vec<u32>>,
    accepting: Vec<Vec<bool>>,
}

impl LocalAutomaton {
    fn build(tree: &UnfoldingTree, node: NodeId, letters: usize) -> LocalAutomaton {
        let dfas: Vec<_> = tree.node(node).children.iter().map(|&c| tree.edge_into(c).unwrap().dfa.clone()).collect();
        let start: Vec<usize> = dfas.iter().map(|d| d.initial()).collect();
        let mut ids: HashMap<Vec<usize>, u32> = HashMap::from([(start.clone(), 0)]);
        let mut states = vec![start];
        let mut next = Vec::new();
        let mut i = 0;
        while i < states.len() {
            let row: Vec<u32> = (0..letters)
                .map(|x| {
                    let t: Vec<usize> = states[i].iter().zip(&dfas).map(|(&q, d)| d.next(q, x)).collect();
                    let fresh = ids.len() as u32;
                    *ids.entry(t.clone()).or_insert_with(|| {
                        states.push(t);
                        fresh
                    })
                })
                .collect();
            next.push(row);
            i += 1;
        }
        let accepting = states
            .iter()
            .map(|s| s.iter().zip(&dfas).map(|(&q, d)| d.is_accepting(q)).collect())
            .collect();
        LocalAutomaton { next, accepting }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Child {
    Unsafe,
    Ignored,
    Internal(usize),
}

/// State of the subtree product at one node: the local state and the states
/// of the children's bit automata.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Composite {
    local: u32,
    children: Vec<u32>,
}

struct NodeContext<'a> {
    local: &'a LocalAutomaton,
    kinds: &'a [Child],
    summaries: &'a [Table],
}

impl NodeContext<'_> {
    fn initial(&self) -> Composite {
        Composite {
            local: 0,
            children: self
                .kinds
                .iter()
                .filter_map(|k| match k {
                    Child::Internal(s) => Some(self.summaries[*s].initial as u32),
                    _ => None,
                })
                .collect(),
        }
    }

    /// Successor when the node is reached (`bit`) and plays `x`, with the
    /// bits passed to its children; `None` when some unsafe leaf is reached
    /// or a child's automaton rejects.
    fn step(&self, c: &Composite, bit: bool, x: Letter) -> Option<(Composite, Vec<bool>)> {
        let local = self.local.next[c.local as usize][x];
        let acc = &self.local.accepting[local as usize];
        let mut children = Vec::with_capacity(c.children.len());
        let mut bits = Vec::with_capacity(c.children.len());
        let mut slot = 0;
        for (j, kind) in self.kinds.iter().enumerate() {
            let b = bit && acc[j];
            match *kind {
                Child::Unsafe if b => return None,
                Child::Unsafe | Child::Ignored => {}
                Child::Internal(s) => {
                    let table = &self.summaries[s];
                    let t = table.next(c.children[slot] as usize, b as usize);
                    if !table.accepting[t] {
                        return None;
                    }
                    children.push(t as u32);
                    bits.push(b);
                    slot += 1;
                }
            }
        }
        Some((Composite { local, children }, bits))
    }
}

pub(super) struct Compositional<'a> {
    tree: &'a UnfoldingTree,
    letters: usize,
    max_states: usize,
    locals: HashMap<usize, Arc<LocalAutomaton>>,
    summaries: Vec<Table>,
    interned: HashMap<Table, usize>,
    memo: HashMap<(usize, Vec<Child>), usize>,
    node_summary: Vec<Option<usize>>,
    pub stats: SearchStats,
}

impl<'a> Compositional<'a> {
    pub fn new(tree: &'a UnfoldingTree, letters: usize, max_states: usize) -> Self {
        Compositional {
            tree,
            letters,
            max_states,
            locals: HashMap::new(),
            summaries: Vec::new(),
            interned: HashMap::new(),
            memo: HashMap::new(),
            node_summary: vec![None; tree.num_nodes()],
            stats: SearchStats::default(),
        }
    }

    fn local(&mut self, node: NodeId) -> Arc<LocalAutomaton> {
        let v = self.tree.label(node);
        let (tree, letters) = (self.tree, self.letters);
        self.locals
            .entry(v)
            .or_insert_with(|| Arc::new(LocalAutomaton::build(tree, node, letters)))
            .clone()
    }

    fn kinds(&self, node: NodeId) -> Vec<Child> {
        self.tree
            .node(node)
            .children
            .iter()
            .map(|&c| match self.tree.node(c).kind {
                NodeKind::UnsafeLeaf => Child::Unsafe,
                NodeKind::RepeatLeaf(_) => Child::Ignored,
                NodeKind::Internal => Child::Internal(self.node_summary[c].expect("children are summarized first")),
            })
            .collect()
    }

    fn charge(&mut self, n: usize) -> Result<(), ProductError> {
        self.stats.explored += n;
        if self.stats.explored > self.max_states {
            return Err(ProductError::StateBudget { cap: self.max_states });
        }
        Ok(())
    }

    /// Bit automata for every internal node except the root, deepest first.
    fn summarize(&mut self) -> Result<(), ProductError> {
        let internal: Vec<NodeId> = self.tree.internal_nodes().to_vec();
        for &n in internal.iter().skip(1).rev() {
            let kinds = self.kinds(n);
            let key = (self.tree.label(n), kinds.clone());
            let id = match self.memo.get(&key) {
                Some(&id) => id,
                None => {
                    let table = self.summary_table(n, &kinds)?;
                    let fresh = self.summaries.len();
                    let id = *self.interned.entry(table.clone()).or_insert(fresh);
                    if id == fresh {
                        self.summaries.push(table);
                    }
                    self.memo.insert(key, id);
                    id
                }
            };
            self.node_summary[n] = Some(id);
        }
        Ok(())
    }

    fn summary_table(&mut self, node: NodeId, kinds: &[Child]) -> Result<Table, ProductError> {
        let local = self.local(node);
        let ctx = NodeContext {
            local: &local,
            kinds,
            summaries: &self.summaries,
        };
        let mut comp_ids: HashMap<Composite, u32> = HashMap::new();
        let mut comp_succ: Vec<[Option<Vec<u32>>; 2]> = Vec::new();
        let mut comps: Vec<Composite> = Vec::new();
        let mut intern = |c: Composite, comps: &mut Vec<Composite>, comp_succ: &mut Vec<[Option<Vec<u32>>; 2]>| -> u32 {
            let fresh = comps.len() as u32;
            *comp_ids.entry(c.clone()).or_insert_with(|| {
                comps.push(c);
                comp_succ.push([None, None]);
                fresh
            })
        };
        let start = intern(ctx.initial(), &mut comps, &mut comp_succ);

        let mut subset_ids: HashMap<Vec<u32>, usize> = HashMap::from([(vec![start], 0)]);
        let mut subsets: Vec<Vec<u32>> = vec![vec![start]];
        let mut trans: Vec<usize> = Vec::new();
        let mut i = 0;
        while i < subsets.len() {
            for bit in [false, true] {
                let mut target: Vec<u32> = Vec::new();
                for k in 0..subsets[i].len() {
                    let c = subsets[i][k] as usize;
                    if comp_succ[c][bit as usize].is_none() {
                        let mut out = Vec::new();
                        for x in 0..self.letters {
                            if let Some((t, _)) = ctx.step(&comps[c], bit, x) {
                                out.push(intern(t, &mut comps, &mut comp_succ));
                            }
                        }
                        comp_succ[c][bit as usize] = Some(out);
                    }
                    target.extend(comp_succ[c][bit as usize].as_ref().unwrap());
                }
                target.sort_unstable();
                target.dedup();
                let fresh = subsets.len();
                let id = *subset_ids.entry(target.clone()).or_insert_with(|| {
                    subsets.push(target);
                    fresh
                });
                trans.push(id);
            }
            i += 1;
            if comps.len() + subsets.len() > self.max_states {
                return Err(ProductError::StateBudget { cap: self.max_states });
            }
        }
        self.charge(comps.len() + subsets.len())?;

        // live states: nonempty and with some successor that is live
        let n = subsets.len();
        let mut live: Vec<bool> = subsets.iter().map(|s| !s.is_empty()).collect();
        loop {
            let mut changed = false;
            for s in 0..n {
                if live[s] && !live[trans[2 * s]] && !live[trans[2 * s + 1]] {
                    live[s] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(Table {
            letters: 2,
            trans,
            accepting: live,
            initial: 0,
        }
        .minimize())
    }

    /// Per-internal-node words of a winning assignment, if one exists.
    pub fn solve(&mut self) -> Result<Option<Vec<UPWord>>, ProductError> {
        self.summarize()?;
        let mut words: Vec<Option<UPWord>> = vec![None; self.tree.num_internal()];
        let mut pending = vec![(self.tree.root(), vec![], vec![true])];
        while let Some((node, prefix, cycle)) = pending.pop() {
            let kinds = self.kinds(node);
            let local = self.local(node);
            let g = Guided {
                ctx: NodeContext {
                    local: &local,
                    kinds: &kinds,
                    summaries: &self.summaries,
                },
                input: prefix.iter().chain(&cycle).copied().collect(),
                prefix_len: prefix.len(),
                letters: self.letters,
            };
            let (lasso, stats) = find_safe_lasso(&g, self.max_states.saturating_sub(self.stats.explored))
                .map_err(|_| ProductError::StateBudget { cap: self.max_states })?;
            self.stats.explored += stats.explored;
            self.stats.surviving += stats.surviving;
            let Some(lasso) = lasso else {
                debug_assert_eq!(node, self.tree.root(), "a child's bit stream was accepted by its automaton");
                return Ok(None);
            };

            // replay to collect the bits passed to each internal child
            let internal_children: Vec<NodeId> = self
                .tree
                .node(node)
                .children
                .iter()
                .copied()
                .filter(|&c| self.tree.is_internal(c))
                .collect();
            let mut child_bits: Vec<Vec<bool>> = vec![Vec::new(); internal_children.len()];
            let mut state = g.initial();
            for &x in lasso.stem.iter().chain(&lasso.cycle) {
                let (pos, comp) = state.clone().expect("lasso stays safe");
                let bit = g.input[pos as usize];
                let (_, bits) = g.ctx.step(&comp, bit, x).expect("lasso stays safe");
                for (acc, b) in child_bits.iter_mut().zip(bits) {
                    acc.push(b);
                }
                state = g.step(&state, x);
            }
            let stem_len = lasso.stem.len();
            for (c, mut bits) in internal_children.into_iter().zip(child_bits) {
                let cyc = bits.split_off(stem_len);
                pending.push((c, bits, cyc));
            }
            let idx = self.tree.internal_index(node).unwrap();
            words[idx] = Some(UPWord::new(lasso.stem, lasso.cycle).expect("cycle is nonempty"));
        }
        Ok(Some(words.into_iter().map(|w| w.expect("every internal node is reached")).collect()))
    }
}

/// The subtree product at one node, reading a fixed ultimately periodic bit
/// stream; only the node's letters remain to be chosen.
struct Guided<'a> {
    ctx: NodeContext<'a>,
    input: Vec<bool>,
    prefix_len: usize,
    letters: usize,
}

impl SafetyAutomaton for Guided<'_> {
    type State = Option<(u32, Composite)>;

    fn initial(&self) -> Self::State {
        Some((0, self.ctx.initial()))
    }

    fn num_letters(&self) -> usize {
        self.letters
    }

    fn step(&self, q: &Self::State, x: usize) -> Self::State {
        let (pos, c) = q.as_ref()?;
        let (next, _) = self.ctx.step(c, self.input[*pos as usize], x)?;
        let mut pos = *pos as usize + 1;
        if pos == self.input.len() {
            pos = self.prefix_len;
        }
        Some((pos as u32, next))
    }

    fn is_safe(&self, q: &Self::State) -> bool {
        q.is_some()
    }
}
