//! Strategies from lassos: per-node words on the unfolding, and the
//! finite-memory strategy on the game that uses internal nodes as memory.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{History, SafetyGame, VertexId};
use crate::lang::{Alphabet, LangError, Letter, UPWord};
use crate::product::Lasso;
use crate::unfolding::{NodeKind, UnfoldingTree};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("lasso letters have {found} coordinates, the tree has {expected} internal nodes")]
    Arity { expected: usize, found: usize },
    #[error("invalid strategy file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("strategy refers to unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("strategy refers to unknown memory node '{0}'")]
    UnknownNode(String),
    #[error("memory node '{0}' declared twice")]
    DuplicateNode(String),
    #[error("memory node '{node}': {source}")]
    Word {
        node: String,
        #[source]
        source: LangError,
    },
    #[error("no update from memory node '{node}' on safe successor '{vertex}'")]
    IncompleteUpdate { node: String, vertex: String },
    #[error("dead letter: {0}")]
    DeadLetter(LangError),
}

/// One ultimately periodic word per internal node, indexed by internal index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStrategy {
    pub words: Vec<UPWord>,
}

/// Coordinate projections of the lasso.
pub fn extract_strategy(tree: &UnfoldingTree, lasso: &Lasso) -> Result<TreeStrategy, SynthesisError> {
    let m = tree.num_internal();
    if let Some(bad) = lasso.stem.iter().chain(&lasso.cycle).find(|a| a.len() != m) {
        return Err(SynthesisError::Arity {
            expected: m,
            found: bad.len(),
        });
    }
    let words = (0..m)
        .map(|i| {
            let prefix = lasso.stem.iter().map(|a| a[i]).collect();
            let period = lasso.cycle.iter().map(|a| a[i]).collect();
            UPWord::new(prefix, period).expect("lasso cycle is nonempty")
        })
        .collect();
    Ok(TreeStrategy { words })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Memory {
    Node(usize),
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryNode {
    pub id: String,
    pub vertex: VertexId,
    pub word: UPWord,
}

/// A finite-memory coalition strategy: `σ(h) = next(m[h], last(h))`, where
/// `m[h]` folds the update table over `h` from the root memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryStrategy {
    alphabet: Arc<Alphabet>,
    vertex_names: Vec<String>,
    nodes: Vec<MemoryNode>,
    root: usize,
    upd: BTreeMap<(usize, VertexId), Memory>,
    dead_letter: Letter,
}

impl MemoryStrategy {
    /// Assembles a strategy; missing updates default to `Dead`.
    pub fn new(
        game: &SafetyGame,
        nodes: Vec<MemoryNode>,
        root: usize,
        upd: BTreeMap<(usize, VertexId), Memory>,
        dead_letter: Letter,
    ) -> MemoryStrategy {
        let a = game.arena();
        MemoryStrategy {
            alphabet: a.alphabet().clone(),
            vertex_names: a.vertices().map(|v| a.name(v).to_string()).collect(),
            nodes,
            root,
            upd,
            dead_letter,
        }
    }

    /// The strategy playing `words[v]` at every safe vertex `v`, whatever
    /// the history.
    pub fn memoryless(game: &SafetyGame, words: &HashMap<VertexId, UPWord>) -> MemoryStrategy {
        let a = game.arena();
        let mut index = HashMap::new();
        let mut nodes = Vec::new();
        for v in game.safe_vertices() {
            index.insert(v, nodes.len());
            nodes.push(MemoryNode {
                id: format!("m_{}", a.name(v)),
                vertex: v,
                word: words.get(&v).cloned().unwrap_or_else(|| UPWord::constant(0)),
            });
        }
        let mut upd = BTreeMap::new();
        for (&v, &i) in &index {
            for (t, _) in a.out_edges(v) {
                upd.insert((i, t), index.get(&t).map_or(Memory::Dead, |&j| Memory::Node(j)));
            }
        }
        let root = *index.get(&a.initial()).unwrap_or(&0);
        MemoryStrategy::new(game, nodes, root, upd, 0)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn nodes(&self) -> &[MemoryNode] {
        &self.nodes
    }

    pub fn root(&self) -> Memory {
        Memory::Node(self.root)
    }

    /// `|M|`, counting the dead state.
    pub fn memory_size(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn update(&self, m: Memory, v: VertexId) -> Memory {
        match m {
            Memory::Dead => Memory::Dead,
            Memory::Node(i) => self.upd.get(&(i, v)).copied().unwrap_or(Memory::Dead),
        }
    }

    pub fn next(&self, m: Memory) -> UPWord {
        match m {
            Memory::Node(i) => self.nodes[i].word.clone(),
            Memory::Dead => UPWord::constant(self.dead_letter),
        }
    }

    /// Borrowing variant of [`next`](Self::next) for hot loops.
    pub fn word(&self, m: Memory) -> Option<&UPWord> {
        match m {
            Memory::Node(i) => Some(&self.nodes[i].word),
            Memory::Dead => None,
        }
    }

    pub fn dead_letter(&self) -> Letter {
        self.dead_letter
    }

    /// `m[h]`.
    pub fn memory_of(&self, h: &History) -> Memory {
        h.vertices()[1..].iter().fold(self.root(), |m, &v| self.update(m, v))
    }

    pub fn strategy_word(&self, h: &History) -> UPWord {
        self.next(self.memory_of(h))
    }

    /// Letter played by agent `n ≥ 1` after `h`.
    pub fn agent_action(&self, h: &History, n: u64) -> Letter {
        self.strategy_word(h).letter_at(n)
    }

    pub fn agent(&self, n: u64) -> AgentView<'_> {
        assert!(n >= 1, "agents are numbered from 1");
        AgentView { strategy: self, agent: n }
    }

    pub fn memory_name(&self, m: Memory) -> &str {
        match m {
            Memory::Node(i) => &self.nodes[i].id,
            Memory::Dead => "dead",
        }
    }

    pub fn updates(&self) -> impl Iterator<Item = (usize, VertexId, Memory)> + '_ {
        self.upd.iter().map(|(&(i, v), &m)| (i, v, m))
    }

    pub fn to_file(&self) -> StrategyFile {
        let word = |w: &[Letter]| self.alphabet.format_word(w);
        StrategyFile {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeEntry {
                    id: n.id.clone(),
                    vertex: self.vertex_names[n.vertex].clone(),
                    prefix: word(n.word.prefix()),
                    period: word(n.word.period()),
                })
                .collect(),
            root: self.nodes[self.root].id.clone(),
            upd: self
                .upd
                .iter()
                .map(|(&(i, v), &m)| UpdateEntry {
                    from: self.nodes[i].id.clone(),
                    vertex: self.vertex_names[v].clone(),
                    to: self.memory_name(m).to_string(),
                })
                .collect(),
            dead_letter: self.alphabet.name(self.dead_letter).to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("strategy serializes")
    }

    /// Reads a strategy for `game`. Updates toward unsafe vertices may be
    /// omitted (they mean `dead`); updates toward safe successors may not.
    pub fn from_file(file: &StrategyFile, game: &SafetyGame) -> Result<MemoryStrategy, SynthesisError> {
        let a = game.arena();
        let sigma = a.alphabet();
        let vertex = |name: &str| a.vertex(name).ok_or_else(|| SynthesisError::UnknownVertex(name.to_string()));
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut nodes = Vec::new();
        for entry in &file.nodes {
            if ids.insert(&entry.id, nodes.len()).is_some() || entry.id == "dead" {
                return Err(SynthesisError::DuplicateNode(entry.id.clone()));
            }
            let word_err = |source| SynthesisError::Word {
                node: entry.id.clone(),
                source,
            };
            let prefix = sigma.parse_word(&entry.prefix).map_err(word_err)?;
            let period = sigma.parse_word(&entry.period).map_err(word_err)?;
            nodes.push(MemoryNode {
                id: entry.id.clone(),
                vertex: vertex(&entry.vertex)?,
                word: UPWord::new(prefix, period).map_err(word_err)?,
            });
        }
        let node = |id: &str| ids.get(id).copied().ok_or_else(|| SynthesisError::UnknownNode(id.to_string()));
        let root = node(&file.root)?;
        let mut upd = BTreeMap::new();
        for entry in &file.upd {
            let to = if entry.to == "dead" { Memory::Dead } else { Memory::Node(node(&entry.to)?) };
            upd.insert((node(&entry.from)?, vertex(&entry.vertex)?), to);
        }
        for (i, n) in nodes.iter().enumerate() {
            for (t, _) in a.out_edges(n.vertex) {
                if game.is_safe(t) && !upd.contains_key(&(i, t)) {
                    return Err(SynthesisError::IncompleteUpdate {
                        node: n.id.clone(),
                        vertex: a.name(t).to_string(),
                    });
                }
            }
        }
        let dead_letter = match sigma.parse_word(&file.dead_letter).map_err(SynthesisError::DeadLetter)?[..] {
            [l] => l,
            _ => {
                return Err(SynthesisError::DeadLetter(LangError::UnknownLetter(
                    file.dead_letter.clone(),
                )))
            }
        };
        Ok(MemoryStrategy::new(game, nodes, root, upd, dead_letter))
    }

    pub fn from_json(text: &str, game: &SafetyGame) -> Result<MemoryStrategy, SynthesisError> {
        MemoryStrategy::from_file(&serde_json::from_str(text)?, game)
    }
}

/// One agent's view: its action after each history.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    strategy: &'a MemoryStrategy,
    agent: u64,
}

impl AgentView<'_> {
    pub fn action(&self, h: &History) -> Letter {
        self.strategy.agent_action(h, self.agent)
    }
}

/// The unfolding's internal nodes as memory: children that are internal are
/// entered, repeated labels jump back to the equilabelled ancestor, unsafe
/// leaves go to `dead`.
pub fn build_memory(game: &SafetyGame, tree: &UnfoldingTree, ts: &TreeStrategy) -> MemoryStrategy {
    assert_eq!(ts.words.len(), tree.num_internal());
    let nodes = tree
        .internal_nodes()
        .iter()
        .zip(&ts.words)
        .map(|(&n, w)| MemoryNode {
            id: tree.node_name(n),
            vertex: tree.label(n),
            word: w.clone(),
        })
        .collect();
    let mut upd = BTreeMap::new();
    for (i, &n) in tree.internal_nodes().iter().enumerate() {
        for &c in &tree.node(n).children {
            let to = match tree.node(c).kind {
                NodeKind::Internal => Memory::Node(tree.internal_index(c).unwrap()),
                NodeKind::RepeatLeaf(a) => Memory::Node(tree.internal_index(a).unwrap()),
                NodeKind::UnsafeLeaf => Memory::Dead,
            };
            upd.insert((i, tree.label(c)), to);
        }
    }
    MemoryStrategy::new(game, nodes, 0, upd, 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub nodes: Vec<NodeEntry>,
    pub root: String,
    pub upd: Vec<UpdateEntry>,
    pub dead_letter: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub vertex: String,
    pub prefix: String,
    pub period: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateEntry {
    pub from: String,
    pub vertex: String,
    pub to: String,
}
