//! Edge-identified directed multigraphs and layered (parallel) sharing graphs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::SharingGroup;
use crate::term::{Substitution, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub tgt: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("a multigraph needs at least one node")]
    NoNodes,
    #[error("edge {edge} refers to unknown node {node}")]
    DanglingEdge { edge: EdgeId, node: NodeId },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {0} is used more than once")]
    DuplicateEdge(EdgeId),
    #[error("node {0} is declared more than once")]
    DuplicateNode(NodeId),
}

/// A directed multigraph `⟨N, E, src, tgt⟩` with a non-empty node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multigraph {
    nodes: BTreeSet<NodeId>,
    edges: BTreeMap<EdgeId, Edge>,
}

impl Multigraph {
    pub fn new<I>(nodes: BTreeSet<NodeId>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (EdgeId, Edge)>,
    {
        if nodes.is_empty() {
            return Err(GraphError::NoNodes);
        }
        let mut map = BTreeMap::new();
        for (id, e) in edges {
            for n in [e.src, e.tgt] {
                if !nodes.contains(&n) {
                    return Err(GraphError::DanglingEdge { edge: id, node: n });
                }
            }
            if map.insert(id, e).is_some() {
                return Err(GraphError::DuplicateEdge(id));
            }
        }
        Ok(Multigraph { nodes, edges: map })
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<EdgeId, Edge> {
        &self.edges
    }

    pub fn out_degree(&self, n: NodeId) -> Result<usize, GraphError> {
        self.check_node(n)?;
        Ok(self.edges.values().filter(|e| e.src == n).count())
    }

    pub fn in_degree(&self, n: NodeId) -> Result<usize, GraphError> {
        self.check_node(n)?;
        Ok(self.edges.values().filter(|e| e.tgt == n).count())
    }

    fn check_node(&self, n: NodeId) -> Result<(), GraphError> {
        if self.nodes.contains(&n) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(n))
        }
    }

    /// Connectivity with edges traversable in either direction.
    pub fn is_connected(&self) -> bool {
        let index: BTreeMap<NodeId, usize> = self.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut uf = UnionFind::new(self.nodes.len());
        for e in self.edges.values() {
            uf.union(index[&e.src], index[&e.tgt]);
        }
        uf.components() == 1
    }
}

/// A family of multigraphs over one labeled node set, one layer per binding.
///
/// Layer `i` corresponds to the `i`-th binding of the substitution in
/// increasing order of its domain variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelSharingGraph {
    labels: BTreeMap<NodeId, SharingGroup>,
    layers: Vec<BTreeMap<EdgeId, Edge>>,
}

impl ParallelSharingGraph {
    /// Fails on an empty node set, dangling edges, or an edge id used in two places.
    pub fn new(labels: BTreeMap<NodeId, SharingGroup>, layers: Vec<Vec<(EdgeId, Edge)>>) -> Result<Self, GraphError> {
        if labels.is_empty() {
            return Err(GraphError::NoNodes);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(layers.len());
        for layer in layers {
            let mut map = BTreeMap::new();
            for (id, e) in layer {
                for n in [e.src, e.tgt] {
                    if !labels.contains_key(&n) {
                        return Err(GraphError::DanglingEdge { edge: id, node: n });
                    }
                }
                if !seen.insert(id) {
                    return Err(GraphError::DuplicateEdge(id));
                }
                map.insert(id, e);
            }
            out.push(map);
        }
        Ok(ParallelSharingGraph { labels, layers: out })
    }

    pub fn labels(&self) -> &BTreeMap<NodeId, SharingGroup> {
        &self.labels
    }

    pub fn label(&self, n: NodeId) -> Option<&SharingGroup> {
        self.labels.get(&n)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.labels.keys().copied()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_edges(&self, i: usize) -> &BTreeMap<EdgeId, Edge> {
        &self.layers[i]
    }

    pub fn layer(&self, i: usize) -> Multigraph {
        Multigraph {
            nodes: self.labels.keys().copied().collect(),
            edges: self.layers[i].clone(),
        }
    }

    /// Pools the edges of all layers over the shared node set.
    pub fn flatten(&self) -> Multigraph {
        Multigraph {
            nodes: self.labels.keys().copied().collect(),
            edges: self
                .layers
                .iter()
                .flat_map(|l| l.iter().map(|(&id, &e)| (id, e)))
                .collect(),
        }
    }

    /// `res(𝒢)`: the multiset sum of all node labels.
    pub fn resultant(&self) -> SharingGroup {
        self.labels.values().fold(SharingGroup::empty(), |acc, l| acc.msum(l))
    }

    /// Checks the sharing-graph conditions for `groups` and `theta`, reporting
    /// the first one that fails.
    pub fn validate(&self, groups: &BTreeSet<SharingGroup>, theta: &Substitution) -> Result<(), Violation> {
        if !theta.is_idempotent() {
            return Err(Violation::NotIdempotent);
        }
        if self.layers.len() != theta.len() {
            return Err(Violation::LayerCount {
                expected: theta.len(),
                found: self.layers.len(),
            });
        }
        for (&n, label) in &self.labels {
            if !groups.contains(label) {
                return Err(Violation::LabelNotInSet {
                    node: n,
                    label: label.clone(),
                });
            }
        }
        for (i, (x, t)) in theta.bindings().enumerate() {
            let layer = &self.layers[i];
            for (&n, label) in &self.labels {
                let expected = u64::from(label.get(x));
                let found = layer.values().filter(|e| e.src == n).count() as u64;
                if expected != found {
                    return Err(Violation::OutDegree {
                        node: n,
                        layer: i,
                        binding: x.clone(),
                        expected,
                        found,
                    });
                }
            }
            for (&n, label) in &self.labels {
                let expected = label.chi(t);
                let found = layer.values().filter(|e| e.tgt == n).count() as u64;
                if expected != found {
                    return Err(Violation::InDegree {
                        node: n,
                        layer: i,
                        binding: x.clone(),
                        expected,
                        found,
                    });
                }
            }
        }
        let mut seen = BTreeSet::new();
        for layer in &self.layers {
            for id in layer.keys() {
                if !seen.insert(*id) {
                    return Err(Violation::SharedEdge(*id));
                }
            }
        }
        if !self.flatten().is_connected() {
            return Err(Violation::Disconnected);
        }
        Ok(())
    }
}

/// The first sharing-graph condition a candidate fails.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("the substitution is not idempotent")]
    NotIdempotent,
    #[error("expected {expected} layers (one per binding), found {found}")]
    LayerCount { expected: usize, found: usize },
    #[error("label {label} of node {node} is not in the group set")]
    LabelNotInSet { node: NodeId, label: SharingGroup },
    #[error("node {node} has out-degree {found} in layer {layer} ({binding}), expected {expected}")]
    OutDegree {
        node: NodeId,
        layer: usize,
        binding: Var,
        expected: u64,
        found: u64,
    },
    #[error("node {node} has in-degree {found} in layer {layer} ({binding}), expected {expected}")]
    InDegree {
        node: NodeId,
        layer: usize,
        binding: Var,
        expected: u64,
        found: u64,
    },
    #[error("edge {0} appears in more than one layer")]
    SharedEdge(EdgeId),
    #[error("the flattening is not connected")]
    Disconnected,
}

#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    count: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            count: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when two components merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        self.count -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.count
    }

    pub(crate) fn len(&self) -> usize {
        self.parent.len()
    }
}
