//! Directed acyclic graphs over 1-based node ids, plus the move primitives
//! used by structure search.
//!
//! A `Dag` is an immutable value: `apply_move` returns a new graph, so graphs
//! can be shared read-only across concurrent score evaluations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node identifier, 1-based.
pub type NodeId = usize;

/// Hard cap for exhaustive DAG enumeration; the count grows super-exponentially.
pub const MAX_EXHAUSTIVE_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

/// A single-edge edit. Canonical order is Add < Delete < Reverse, then
/// lexicographic by (source, target); search tie-breaking depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub source: NodeId,
    pub target: NodeId,
}

impl Move {
    pub fn add(source: NodeId, target: NodeId) -> Self {
        Move {
            kind: MoveKind::Add,
            source,
            target,
        }
    }
    pub fn delete(source: NodeId, target: NodeId) -> Self {
        Move {
            kind: MoveKind::Delete,
            source,
            target,
        }
    }
    pub fn reverse(source: NodeId, target: NodeId) -> Self {
        Move {
            kind: MoveKind::Reverse,
            source,
            target,
        }
    }
}

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match self.kind {
            MoveKind::Add => "add",
            MoveKind::Delete => "delete",
            MoveKind::Reverse => "reverse",
        };
        write!(f, "{}({} -> {})", k, self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    num_nodes: usize,
    // indexed by node-1; ids stored 1-based
    parents: Vec<BTreeSet<NodeId>>,
    children: Vec<BTreeSet<NodeId>>,
    num_edges: usize,
}

impl Dag {
    /// Edgeless graph on `num_nodes` nodes.
    pub fn empty(num_nodes: usize) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(Dag {
            num_nodes,
            parents: vec![BTreeSet::new(); num_nodes],
            children: vec![BTreeSet::new(); num_nodes],
            num_edges: 0,
        })
    }

    /// Build from an edge list, validating ids, self-loops, duplicates, and acyclicity.
    pub fn new(num_nodes: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut g = Dag::empty(num_nodes)?;
        for &(s, t) in edges {
            g.check_node(s)?;
            g.check_node(t)?;
            if s == t {
                return Err(Error::Validation(format!("self-loop on node {s}")));
            }
            if g.has_edge(s, t) || g.has_edge(t, s) {
                return Err(Error::Validation(format!(
                    "nodes {s} and {t} are already adjacent"
                )));
            }
            g.insert_edge(s, t);
        }
        if !is_acyclic(num_nodes, &g.edges()) {
            return Err(Error::Validation(
                "edge set contains a directed cycle".into(),
            ));
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    fn check_node(&self, j: NodeId) -> Result<()> {
        if j == 0 || j > self.num_nodes {
            Err(Error::NodeOutOfRange {
                node: j,
                num_nodes: self.num_nodes,
            })
        } else {
            Ok(())
        }
    }

    /// Parent set of node `j` (its direct causes).
    pub fn parents(&self, j: NodeId) -> Result<&BTreeSet<NodeId>> {
        self.check_node(j)?;
        Ok(&self.parents[j - 1])
    }

    pub fn children(&self, j: NodeId) -> Result<&BTreeSet<NodeId>> {
        self.check_node(j)?;
        Ok(&self.children[j - 1])
    }

    pub fn has_edge(&self, s: NodeId, t: NodeId) -> bool {
        s >= 1 && s <= self.num_nodes && self.children[s - 1].contains(&t)
    }

    /// All edges, sorted by (source, target).
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.num_edges);
        for s in 1..=self.num_nodes {
            for &t in &self.children[s - 1] {
                out.push((s, t));
            }
        }
        out
    }

    fn insert_edge(&mut self, s: NodeId, t: NodeId) {
        self.children[s - 1].insert(t);
        self.parents[t - 1].insert(s);
        self.num_edges += 1;
    }

    fn remove_edge(&mut self, s: NodeId, t: NodeId) {
        self.children[s - 1].remove(&t);
        self.parents[t - 1].remove(&s);
        self.num_edges -= 1;
    }

    /// True iff a directed path from `from` to `to` exists (DFS over children).
    fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            if std::mem::replace(&mut seen[u - 1], true) {
                continue;
            }
            stack.extend(self.children[u - 1].iter().copied());
        }
        false
    }

    fn move_applicable(&self, m: Move) -> Result<()> {
        self.check_node(m.source)?;
        self.check_node(m.target)?;
        if m.source == m.target {
            return Err(Error::InapplicableMove(m.to_string()));
        }
        match m.kind {
            MoveKind::Add => {
                if self.has_edge(m.source, m.target) || self.has_edge(m.target, m.source) {
                    return Err(Error::InapplicableMove(m.to_string()));
                }
                // s -> t closes a cycle iff t already reaches s
                if self.reaches(m.target, m.source) {
                    return Err(Error::WouldCreateCycle(m.to_string()));
                }
            }
            MoveKind::Delete => {
                if !self.has_edge(m.source, m.target) {
                    return Err(Error::InapplicableMove(m.to_string()));
                }
            }
            MoveKind::Reverse => {
                if !self.has_edge(m.source, m.target) {
                    return Err(Error::InapplicableMove(m.to_string()));
                }
                // after removing s -> t, adding t -> s closes a cycle iff
                // s still reaches t by another path
                let mut tmp = self.clone();
                tmp.remove_edge(m.source, m.target);
                if tmp.reaches(m.source, m.target) {
                    return Err(Error::WouldCreateCycle(m.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Apply one move, returning the edited graph.
    pub fn apply_move(&self, m: Move) -> Result<Dag> {
        self.move_applicable(m)?;
        let mut g = self.clone();
        match m.kind {
            MoveKind::Add => g.insert_edge(m.source, m.target),
            MoveKind::Delete => g.remove_edge(m.source, m.target),
            MoveKind::Reverse => {
                g.remove_edge(m.source, m.target);
                g.insert_edge(m.target, m.source);
            }
        }
        Ok(g)
    }

    /// All applicable moves in canonical order: adds, then deletes, then
    /// reversals, each lexicographic by (source, target).
    pub fn legal_moves(&self) -> Vec<Move> {
        self.legal_moves_capped(None)
    }

    /// `legal_moves` with an optional maximum-parent-count constraint: adds and
    /// reversals that would push any node above `max_parents` are excluded.
    pub fn legal_moves_capped(&self, max_parents: Option<usize>) -> Vec<Move> {
        let fits = |j: NodeId| match max_parents {
            Some(m) => self.parents[j - 1].len() < m,
            None => true,
        };
        let mut moves = Vec::new();
        for s in 1..=self.num_nodes {
            for t in 1..=self.num_nodes {
                if s == t || self.has_edge(s, t) || self.has_edge(t, s) {
                    continue;
                }
                if fits(t) && !self.reaches(t, s) {
                    moves.push(Move::add(s, t));
                }
            }
        }
        for (s, t) in self.edges() {
            moves.push(Move::delete(s, t));
        }
        for (s, t) in self.edges() {
            if !fits(s) {
                continue;
            }
            let mut tmp = self.clone();
            tmp.remove_edge(s, t);
            if !tmp.reaches(s, t) {
                moves.push(Move::reverse(s, t));
            }
        }
        moves
    }

    /// Deterministic topological order (smallest id first among ready nodes).
    pub fn topological_order(&self) -> Vec<NodeId> {
        let mut indeg: Vec<usize> = (0..self.num_nodes).map(|i| self.parents[i].len()).collect();
        let mut ready: BTreeSet<NodeId> = (1..=self.num_nodes)
            .filter(|&j| indeg[j - 1] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.num_nodes);
        while let Some(&j) = ready.iter().next() {
            ready.remove(&j);
            order.push(j);
            for &c in &self.children[j - 1] {
                indeg[c - 1] -= 1;
                if indeg[c - 1] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), self.num_nodes);
        order
    }
}

/// True iff the directed graph has no directed cycle (Kahn's algorithm).
pub fn is_acyclic(num_nodes: usize, edges: &[(NodeId, NodeId)]) -> bool {
    let mut indeg = vec![0usize; num_nodes];
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); num_nodes];
    for &(s, t) in edges {
        if s == t {
            return false;
        }
        children[s - 1].push(t);
        indeg[t - 1] += 1;
    }
    let mut stack: Vec<NodeId> = (1..=num_nodes).filter(|&j| indeg[j - 1] == 0).collect();
    let mut removed = 0;
    while let Some(j) = stack.pop() {
        removed += 1;
        for &c in &children[j - 1] {
            indeg[c - 1] -= 1;
            if indeg[c - 1] == 0 {
                stack.push(c);
            }
        }
    }
    removed == num_nodes
}

/// Yield every labeled DAG on `num_nodes` nodes exactly once.
///
/// Enumerates all subsets of ordered pairs and keeps the acyclic ones; capped
/// at 4 nodes (543 DAGs) since the count grows super-exponentially.
pub fn enumerate_dags(num_nodes: usize) -> Result<impl Iterator<Item = Dag>> {
    if num_nodes == 0 {
        return Err(Error::EmptyGraph);
    }
    if num_nodes > MAX_EXHAUSTIVE_NODES {
        return Err(Error::TooManyNodes {
            given: num_nodes,
            max: MAX_EXHAUSTIVE_NODES,
        });
    }
    let mut pairs = Vec::new();
    for s in 1..=num_nodes {
        for t in 1..=num_nodes {
            if s != t {
                pairs.push((s, t));
            }
        }
    }
    let total: u64 = 1 << pairs.len();
    Ok((0..total).filter_map(move |mask| {
        let edges: Vec<(NodeId, NodeId)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if is_acyclic(num_nodes, &edges) {
            Some(Dag::new(num_nodes, &edges).expect("acyclic edge set"))
        } else {
            None
        }
    }))
}

/// Parse the `source_name -> target_name` edge-list format against a fixed
/// name universe (`names[i]` is node i+1). Blank lines and `#` comments allowed.
pub fn parse_edge_list(text: &str, names: &[String]) -> Result<Dag> {
    let lookup = |name: &str, line: usize| -> Result<NodeId> {
        names
            .iter()
            .position(|n| n == name)
            .map(|i| i + 1)
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown node name {name:?}"),
            })
    };
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (lhs, rhs) = trimmed.split_once("->").ok_or_else(|| Error::Parse {
            line,
            msg: "expected `source -> target`".into(),
        })?;
        edges.push((lookup(lhs.trim(), line)?, lookup(rhs.trim(), line)?));
    }
    Dag::new(names.len(), &edges)
}

/// Render the edge-list format, one `source -> target` per line, sorted.
pub fn format_edge_list(g: &Dag, names: &[String]) -> String {
    let mut out = String::new();
    for (s, t) in g.edges() {
        out.push_str(&format!("{} -> {}\n", names[s - 1], names[t - 1]));
    }
    out
}

/// DOT export; isolated nodes are declared so the graph renders completely.
pub fn to_dot(g: &Dag, names: &[String]) -> String {
    let mut out = String::from("digraph g {\n");
    for name in names {
        out.push_str(&format!("  \"{name}\";\n"));
    }
    for (s, t) in g.edges() {
        out.push_str(&format!(
            "  \"{}\" -> \"{}\";\n",
            names[s - 1],
            names[t - 1]
        ));
    }
    out.push_str("}\n");
    out
}
