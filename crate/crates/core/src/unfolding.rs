//! Finite tree unfolding of a safety game, and the loop-erasing `zip` map
//! that sends game histories to tree nodes.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::arena::{ArenaError, History, SafetyGame, VertexId};
use crate::lang::{Alphabet, Dfa};

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnfoldError {
    #[error("history does not start at the initial vertex")]
    NotFromInitial,
    #[error("'{0}' is not a loop-free history of the tree")]
    NotInZipImage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Internal,
    /// Leaf whose label is unsafe.
    UnsafeLeaf,
    /// Leaf whose label already occurs on the given proper ancestor.
    RepeatLeaf(NodeId),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub vertex: VertexId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: usize,
    pub kind: NodeKind,
}

/// A tree edge. Its index `s` equals `target - 1`, since every non-root node
/// has exactly one incoming edge and both are numbered breadth-first.
#[derive(Debug, Clone)]
pub struct TreeEdge {
    pub source: NodeId,
    pub target: NodeId,
    /// Internal-node index of `source`.
    pub source_index: usize,
    pub dfa: Arc<Dfa>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct UnfoldingTree {
    nodes: Vec<Node>,
    edges: Vec<TreeEdge>,
    internal: Vec<NodeId>,
    internal_index: Vec<Option<usize>>,
    leaves: Vec<NodeId>,
    vertex_names: Vec<String>,
    safe: Vec<bool>,
    alphabet: Arc<Alphabet>,
}

/// Builds the unfolding of a normalized game. Nodes and edges are numbered
/// breadth-first; children follow target declaration order.
pub fn unfold(game: &SafetyGame) -> UnfoldingTree {
    let arena = game.arena();
    let mut nodes: Vec<Node> = Vec::new();
    let mut edges: Vec<TreeEdge> = Vec::new();
    let mut internal = Vec::new();
    let mut internal_index = Vec::new();
    let mut leaves = Vec::new();

    let classify = |nodes: &[Node], vertex: VertexId, parent: Option<NodeId>| -> NodeKind {
        if !game.is_safe(vertex) {
            return NodeKind::UnsafeLeaf;
        }
        let mut cursor = parent;
        while let Some(a) = cursor {
            if nodes[a].vertex == vertex {
                return NodeKind::RepeatLeaf(a);
            }
            cursor = nodes[a].parent;
        }
        NodeKind::Internal
    };

    let root_kind = classify(&nodes, arena.initial(), None);
    nodes.push(Node {
        vertex: arena.initial(),
        parent: None,
        children: Vec::new(),
        depth: 0,
        kind: root_kind,
    });
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        if nodes[n].kind != NodeKind::Internal {
            internal_index.push(None);
            leaves.push(n);
            continue;
        }
        let idx = internal.len();
        internal.push(n);
        internal_index.push(Some(idx));
        for (target, edge) in arena.out_edges(nodes[n].vertex) {
            let kind = classify(&nodes, target, Some(n));
            let child = nodes.len();
            nodes.push(Node {
                vertex: target,
                parent: Some(n),
                children: Vec::new(),
                depth: nodes[n].depth + 1,
                kind,
            });
            nodes[n].children.push(child);
            edges.push(TreeEdge {
                source: n,
                target: child,
                source_index: idx,
                dfa: edge.dfa.clone(),
                label: edge.label.clone(),
            });
            queue.push_back(child);
        }
    }
    // nodes are dequeued in creation order, so `internal_index` is indexed by node id
    debug_assert_eq!(internal_index.len(), nodes.len());

    UnfoldingTree {
        nodes,
        edges,
        internal,
        internal_index,
        leaves,
        vertex_names: arena.vertices().map(|v| arena.name(v).to_string()).collect(),
        safe: arena.vertices().map(|v| game.is_safe(v)).collect(),
        alphabet: arena.alphabet().clone(),
    }
}

impl UnfoldingTree {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    /// The edge entering `n`, if `n` is not the root.
    pub fn edge_into(&self, n: NodeId) -> Option<&TreeEdge> {
        n.checked_sub(1).map(|s| &self.edges[s])
    }

    /// Internal nodes in order `n_0, n_1, …` (root first when internal).
    pub fn internal_nodes(&self) -> &[NodeId] {
        &self.internal
    }

    pub fn num_internal(&self) -> usize {
        self.internal.len()
    }

    pub fn internal_index(&self, n: NodeId) -> Option<usize> {
        self.internal_index[n]
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn is_internal(&self, n: NodeId) -> bool {
        self.nodes[n].kind == NodeKind::Internal
    }

    pub fn is_unsafe_leaf(&self, n: NodeId) -> bool {
        self.nodes[n].kind == NodeKind::UnsafeLeaf
    }

    pub fn label(&self, n: NodeId) -> VertexId {
        self.nodes[n].vertex
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v]
    }

    pub fn is_safe_vertex(&self, v: VertexId) -> bool {
        self.safe[v]
    }

    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Child of `n` labelled `v`.
    pub fn child_with_label(&self, n: NodeId, v: VertexId) -> Option<NodeId> {
        self.nodes[n].children.iter().copied().find(|&c| self.nodes[c].vertex == v)
    }

    /// Root-to-node sequence of nodes.
    pub fn path_to(&self, n: NodeId) -> Vec<NodeId> {
        let mut path = vec![n];
        let mut cursor = self.nodes[n].parent;
        while let Some(p) = cursor {
            path.push(p);
            cursor = self.nodes[p].parent;
        }
        path.reverse();
        path
    }

    /// All root-to-leaf paths, in leaf order.
    pub fn maximal_paths(&self) -> Vec<Vec<NodeId>> {
        self.leaves.iter().map(|&l| self.path_to(l)).collect()
    }

    /// Label sequence of the root path of `n`.
    pub fn beta(&self, n: NodeId) -> Vec<VertexId> {
        self.path_to(n).into_iter().map(|m| self.nodes[m].vertex).collect()
    }

    /// The internal node or unsafe leaf whose root path is labelled `z`.
    pub fn alpha(&self, z: &[VertexId]) -> Result<NodeId, UnfoldError> {
        let missing = || UnfoldError::NotInZipImage(self.render_vertices(z));
        let (&first, rest) = z.split_first().ok_or_else(missing)?;
        if first != self.nodes[0].vertex {
            return Err(missing());
        }
        let mut n = 0;
        for &v in rest {
            n = self.child_with_label(n, v).ok_or_else(missing)?;
        }
        match self.nodes[n].kind {
            NodeKind::RepeatLeaf(_) => Err(missing()),
            _ => Ok(n),
        }
    }

    fn render_vertices(&self, vs: &[VertexId]) -> String {
        vs.iter()
            .map(|&v| self.vertex_names.get(v).map_or("?", |s| s.as_str()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Display name of a node: `n_i` for internal nodes, `leaf_j` otherwise.
    pub fn node_name(&self, n: NodeId) -> String {
        match self.internal_index[n] {
            Some(i) => format!("n{i}"),
            None => format!("leaf{}", self.leaves.iter().position(|&l| l == n).unwrap()),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph unfolding {\n  node [shape=box];\n");
        for (id, node) in self.nodes.iter().enumerate() {
            let name = self.vertex_name(node.vertex);
            let attrs = match node.kind {
                NodeKind::Internal => format!("label=\"{} : {}\"", self.node_name(id), escape(name)),
                NodeKind::UnsafeLeaf => format!("label=\"{}\", style=dashed", escape(name)),
                NodeKind::RepeatLeaf(_) => format!("label=\"{}\"", escape(name)),
            };
            let _ = writeln!(out, "  t{id} [{attrs}];");
        }
        for e in &self.edges {
            let style = if self.is_unsafe_leaf(e.target) { ", style=dashed" } else { "" };
            let _ = writeln!(out, "  t{} -> t{} [label=\"{}\"{style}];", e.source, e.target, escape(&e.label));
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Incremental `zip`: keeps the virtual history of a growing game history.
#[derive(Debug, Clone)]
pub struct Zipper {
    seq: Vec<VertexId>,
    position: Vec<Option<usize>>,
}

impl Zipper {
    pub fn new(num_vertices: usize, start: VertexId) -> Zipper {
        let mut position = vec![None; num_vertices];
        position[start] = Some(0);
        Zipper {
            seq: vec![start],
            position,
        }
    }

    /// Extends the underlying history by `v`. A vertex already present cuts
    /// the virtual history back to its occurrence.
    pub fn push(&mut self, v: VertexId) {
        match self.position[v] {
            Some(i) => {
                for u in self.seq.drain(i + 1..) {
                    self.position[u] = None;
                }
            }
            None => {
                self.position[v] = Some(self.seq.len());
                self.seq.push(v);
            }
        }
    }

    pub fn current(&self) -> &[VertexId] {
        &self.seq
    }
}

/// The virtual history of `h`, which must start at the initial vertex.
pub fn zip(game: &SafetyGame, h: &History) -> Result<Vec<VertexId>, UnfoldError> {
    let vs = h.vertices();
    if vs[0] != game.arena().initial() {
        return Err(UnfoldError::NotFromInitial);
    }
    let mut z = Zipper::new(game.arena().num_vertices(), vs[0]);
    for &v in &vs[1..] {
        if !game.is_safe(*z.current().last().unwrap()) {
            break;
        }
        z.push(v);
    }
    Ok(z.current().to_vec())
}

/// `zip` over vertex names, for tests and the command line.
pub fn zip_names(game: &SafetyGame, names: &[&str]) -> Result<Vec<VertexId>, ArenaError> {
    let h = History::from_names(game.arena(), names)?;
    zip(game, &h).map_err(|e| ArenaError::NotAHistory(e.to_string()))
}
