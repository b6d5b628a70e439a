//! Parameterized arenas and safety games.
//!
//! Edges carry regular languages over Σ⁺; a word of length `k` is one joint
//! move of `k` agents. Arenas read from files may be incomplete and may name
//! default targets for the words no edge covers; [`SafetyGame::normalize`]
//! makes them complete and turns unsafe vertices into sinks.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{self, length_set, Alphabet, Dfa, LangError, Letter};

pub type VertexId = usize;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("edge {from} -> {to}: {source}")]
    Label {
        from: String,
        to: String,
        #[source]
        source: LangError,
    },
    #[error("vertex '{0}' is not declared")]
    UnknownVertex(String),
    #[error("vertex '{0}' declared twice")]
    DuplicateVertex(String),
    #[error("initial vertex '{0}' is not declared")]
    InitialUndeclared(String),
    #[error("arena has no vertices")]
    NoVertices,
    #[error("not a history: {0}")]
    NotAHistory(String),
    #[error("invalid arena file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A labelled arena edge. `label` is the source expression text.
#[derive(Debug, Clone)]
pub struct Edge {
    pub dfa: Arc<Dfa>,
    pub label: String,
}

/// A parameterized arena `⟨V, Σ, Δ⟩` with an initial vertex.
#[derive(Debug, Clone)]
pub struct Arena {
    alphabet: Arc<Alphabet>,
    vertices: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: BTreeMap<(VertexId, VertexId), Edge>,
    initial: VertexId,
}

impl Arena {
    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.vertices.len()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v]
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn initial(&self) -> VertexId {
        self.initial
    }

    pub fn edge(&self, from: VertexId, to: VertexId) -> Option<&Edge> {
        self.edges.get(&(from, to))
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edges of `v`, by target declaration order.
    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = (VertexId, &Edge)> + '_ {
        self.edges.range((v, 0)..(v + 1, 0)).map(|(&(_, t), e)| (t, e))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, &Edge)> + '_ {
        self.edges.iter().map(|(&(f, t), e)| (f, t, e))
    }

    /// Vertices `v'` with `word ∈ Δ(v, v')`.
    pub fn successors(&self, v: VertexId, word: &[Letter]) -> Vec<VertexId> {
        self.out_edges(v)
            .filter(|(_, e)| e.dfa.accepts(word))
            .map(|(t, _)| t)
            .collect()
    }

    fn outgoing_union(&self, v: VertexId) -> Dfa {
        self.out_edges(v)
            .fold(Dfa::empty(self.alphabet.clone()), |acc, (_, e)| acc.union(&e.dfa))
    }

    /// Every vertex covers Σ⁺ with its outgoing languages.
    pub fn completeness_check(&self) -> bool {
        self.vertices().all(|v| self.outgoing_union(v).is_sigma_plus())
    }

    /// Outgoing languages of every vertex are pairwise disjoint.
    pub fn determinism_check(&self) -> bool {
        self.vertices().all(|v| {
            let outs: Vec<&Edge> = self.out_edges(v).map(|(_, e)| e).collect();
            outs.iter()
                .enumerate()
                .all(|(i, a)| outs[i + 1..].iter().all(|b| a.dfa.is_disjoint(&b.dfa)))
        })
    }

    /// True iff every step of `h` admits a word of length `k`.
    pub fn k_realizable(&self, h: &History, k: u64) -> bool {
        h.0.windows(2).all(|p| {
            self.edge(p[0], p[1])
                .is_some_and(|e| length_set(&e.dfa).contains(k))
        })
    }

    pub fn total_dfa_states(&self) -> usize {
        self.edges.values().map(|e| e.dfa.num_states()).sum()
    }
}

/// A nonempty vertex sequence following defined edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History(Vec<VertexId>);

impl History {
    pub fn new(arena: &Arena, vertices: Vec<VertexId>) -> Result<History, ArenaError> {
        if vertices.is_empty() {
            return Err(ArenaError::NotAHistory("empty sequence".into()));
        }
        if let Some(&bad) = vertices.iter().find(|&&v| v >= arena.num_vertices()) {
            return Err(ArenaError::NotAHistory(format!("vertex #{bad} out of range")));
        }
        for p in vertices.windows(2) {
            if arena.edge(p[0], p[1]).is_none() {
                return Err(ArenaError::NotAHistory(format!(
                    "no edge {} -> {}",
                    arena.name(p[0]),
                    arena.name(p[1])
                )));
            }
        }
        Ok(History(vertices))
    }

    pub fn from_names(arena: &Arena, names: &[&str]) -> Result<History, ArenaError> {
        let ids = names
            .iter()
            .map(|n| arena.vertex(n).ok_or_else(|| ArenaError::UnknownVertex(n.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        History::new(arena, ids)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    pub fn last(&self) -> VertexId {
        *self.0.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A safety game: an arena and its safe vertices.
#[derive(Debug, Clone)]
pub struct SafetyGame {
    arena: Arena,
    safe: Vec<bool>,
    defaults: Vec<Option<VertexId>>,
}

impl SafetyGame {
    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn is_safe(&self, v: VertexId) -> bool {
        self.safe[v]
    }

    pub fn safe_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.arena.vertices().filter(|&v| self.safe[v])
    }

    pub fn unsafe_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.arena.vertices().filter(|&v| !self.safe[v])
    }

    pub fn from_json(text: &str) -> Result<SafetyGame, ArenaError> {
        let file: ArenaFile = serde_json::from_str(text)?;
        SafetyGame::from_file(&file)
    }

    /// Builds the game described by a file. Repeated `(from, to)` entries are
    /// merged by union. The result is not normalized.
    pub fn from_file(file: &ArenaFile) -> Result<SafetyGame, ArenaError> {
        let alphabet = Arc::new(Alphabet::new(file.alphabet.iter().cloned())?);
        if file.vertices.is_empty() {
            return Err(ArenaError::NoVertices);
        }
        let mut index = HashMap::new();
        for (i, name) in file.vertices.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(ArenaError::DuplicateVertex(name.clone()));
            }
        }
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| ArenaError::UnknownVertex(name.to_string()));
        let initial = index
            .get(&file.initial)
            .copied()
            .ok_or_else(|| ArenaError::InitialUndeclared(file.initial.clone()))?;

        let mut edges: BTreeMap<(VertexId, VertexId), Edge> = BTreeMap::new();
        for spec in &file.edges {
            let (from, to) = (lookup(&spec.from)?, lookup(&spec.to)?);
            let dfa = lang::compile_str(&spec.lang, &alphabet).map_err(|source| ArenaError::Label {
                from: spec.from.clone(),
                to: spec.to.clone(),
                source,
            })?;
            match edges.get_mut(&(from, to)) {
                Some(existing) => {
                    existing.dfa = Arc::new(existing.dfa.union(&dfa));
                    existing.label = format!("({}) | ({})", existing.label, spec.lang);
                }
                None => {
                    edges.insert(
                        (from, to),
                        Edge {
                            dfa: Arc::new(dfa),
                            label: spec.lang.clone(),
                        },
                    );
                }
            }
        }

        let mut safe = vec![false; file.vertices.len()];
        for name in &file.safe {
            safe[lookup(name)?] = true;
        }
        let mut defaults = vec![None; file.vertices.len()];
        match &file.default_target {
            None => {}
            Some(DefaultTarget::All(target)) => {
                let t = lookup(target)?;
                defaults.iter_mut().for_each(|d| *d = Some(t));
            }
            Some(DefaultTarget::PerVertex(map)) => {
                for (v, t) in map {
                    defaults[lookup(v)?] = Some(lookup(t)?);
                }
            }
        }
        let arena = Arena {
            alphabet,
            vertices: file.vertices.clone(),
            index,
            edges,
            initial,
        };
        Ok(SafetyGame { arena, safe, defaults })
    }

    /// Writes the game back to the file form. Labels are expression texts, so
    /// the file re-parses to the same game.
    pub fn to_file(&self) -> ArenaFile {
        let a = &self.arena;
        let mut per_vertex = BTreeMap::new();
        for v in a.vertices() {
            if let Some(t) = self.defaults[v] {
                per_vertex.insert(a.name(v).to_string(), a.name(t).to_string());
            }
        }
        ArenaFile {
            alphabet: a.alphabet.names().to_vec(),
            vertices: a.vertices.clone(),
            safe: self.safe_vertices().map(|v| a.name(v).to_string()).collect(),
            initial: a.name(a.initial).to_string(),
            default_target: (!per_vertex.is_empty()).then_some(DefaultTarget::PerVertex(per_vertex)),
            edges: a
                .edges()
                .map(|(f, t, e)| EdgeSpec {
                    from: a.name(f).to_string(),
                    to: a.name(t).to_string(),
                    lang: e.label.clone(),
                })
                .collect(),
        }
    }

    /// Completes the arena and turns unsafe vertices into Σ⁺ sinks.
    ///
    /// Words not covered at a safe vertex go to its default target when one is
    /// named, otherwise to a fresh unsafe vertex `bot`. Empty edges are
    /// dropped.
    pub fn normalize(&self) -> SafetyGame {
        let mut game = self.clone();
        let sigma = game.arena.alphabet.clone();
        game.arena.edges.retain(|_, e| !e.dfa.is_empty());

        let unsafe_vs: Vec<VertexId> = game.unsafe_vertices().collect();
        for v in unsafe_vs {
            game.make_sink(v);
        }

        let mut fresh_bot: Option<VertexId> = None;
        for v in game.arena.vertices().collect::<Vec<_>>() {
            if !game.safe[v] {
                continue;
            }
            let covered = game.arena.outgoing_union(v);
            if covered.is_sigma_plus() {
                continue;
            }
            let rest = covered.complement();
            let rest_label = {
                let labels: Vec<String> = game.arena.out_edges(v).map(|(_, e)| format!("({})", e.label)).collect();
                if labels.is_empty() {
                    ".+".to_string()
                } else {
                    format!("!({})", labels.join(" | "))
                }
            };
            let target = match game.defaults[v] {
                Some(t) => t,
                None => *fresh_bot.get_or_insert_with(|| game.add_bot()),
            };
            match game.arena.edges.get_mut(&(v, target)) {
                Some(e) => {
                    e.dfa = Arc::new(e.dfa.union(&rest));
                    e.label = format!("({}) | {}", e.label, rest_label);
                }
                None => {
                    game.arena.edges.insert(
                        (v, target),
                        Edge {
                            dfa: Arc::new(rest),
                            label: rest_label,
                        },
                    );
                }
            }
        }
        debug_assert!(game.arena.completeness_check());
        let _ = sigma;
        game
    }

    fn make_sink(&mut self, v: VertexId) {
        let keys: Vec<_> = self.arena.out_edges(v).map(|(t, _)| (v, t)).collect();
        for k in keys {
            self.arena.edges.remove(&k);
        }
        self.arena.edges.insert(
            (v, v),
            Edge {
                dfa: Arc::new(Dfa::sigma_plus(self.arena.alphabet.clone())),
                label: ".+".to_string(),
            },
        );
    }

    fn add_bot(&mut self) -> VertexId {
        let mut name = "bot".to_string();
        while self.arena.index.contains_key(&name) {
            name.push('\'');
        }
        let id = self.arena.vertices.len();
        self.arena.vertices.push(name.clone());
        self.arena.index.insert(name, id);
        self.safe.push(false);
        self.defaults.push(None);
        self.make_sink(id);
        id
    }

    /// Unsafe vertices are exactly Σ⁺ self-loop sinks and the arena is
    /// complete.
    pub fn is_normalized(&self) -> bool {
        self.arena.completeness_check()
            && self.unsafe_vertices().all(|v| {
                let outs: Vec<_> = self.arena.out_edges(v).collect();
                outs.len() == 1 && outs[0].0 == v && outs[0].1.dfa.is_sigma_plus()
            })
    }
}

/// The JSON arena file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArenaFile {
    pub alphabet: Vec<String>,
    pub vertices: Vec<String>,
    pub safe: Vec<String>,
    pub initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_target: Option<DefaultTarget>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DefaultTarget {
    All(String),
    PerVertex(BTreeMap<String, String>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub lang: String,
}
