//! Weighted cut engines over measurement multigraphs.
//!
//! Parallel edges are merged per node pair inside the engines, but every
//! [`CutResult`] lists individual measurement edges. Ties between cuts of
//! equal weight (within [`Scalar::tie_tolerance`]) go to the cut with fewer
//! edges; the engines do this by running on `(weight, edge count)` keys in
//! lexicographic order.

mod enumerate;
mod flow;
mod stoer_wagner;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{GraphEdge, MeasurementGraph, MeasurementId};
use crate::scalar::{Scalar, Weight};

pub use enumerate::{enumerate_cuts, DEFAULT_MAX_ENUM_NODES};
pub use flow::{max_flow_value, min_st_cut};
pub use stoer_wagner::global_min_cut;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("graph has {nodes} nodes, more than the limit of {max}")]
    TooLarge { nodes: usize, max: usize },
    #[error("node {0} is out of range")]
    UnknownNode(usize),
    #[error("source and sink must differ")]
    SameTerminals,
    #[error("a cut needs at least two nodes")]
    TooFewNodes,
    #[error("edge {0} has a negative weight")]
    NegativeWeight(MeasurementId),
    #[error("edge {0} is a self-loop")]
    SelfLoop(MeasurementId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedEdge<W> {
    pub id: MeasurementId,
    pub a: usize,
    pub b: usize,
    pub secure: bool,
    pub weight: Weight<W>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedGraph<W> {
    node_count: usize,
    edges: Vec<WeightedEdge<W>>,
}

impl<W: Scalar> WeightedGraph<W> {
    pub fn new(node_count: usize, edges: Vec<WeightedEdge<W>>) -> Result<Self, CutError> {
        for e in &edges {
            for v in [e.a, e.b] {
                if v >= node_count {
                    return Err(CutError::UnknownNode(v));
                }
            }
            if e.a == e.b {
                return Err(CutError::SelfLoop(e.id));
            }
            if let Weight::Finite(w) = e.weight {
                if w < W::zero() {
                    return Err(CutError::NegativeWeight(e.id));
                }
            }
        }
        Ok(WeightedGraph { node_count, edges })
    }

    /// Weights every edge of `graph` with `weight`.
    pub fn from_graph(graph: &MeasurementGraph, weight: impl Fn(&GraphEdge) -> Weight<W>) -> Self {
        let edges = graph
            .edges()
            .iter()
            .map(|e| WeightedEdge { id: e.id, a: e.a, b: e.b, secure: e.secure, weight: weight(e) })
            .collect();
        WeightedGraph::new(graph.node_count(), edges).expect("graph edges are valid and weights nonnegative")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[WeightedEdge<W>] {
        &self.edges
    }

    pub(crate) fn edges_mut(&mut self) -> &mut [WeightedEdge<W>] {
        &mut self.edges
    }

    pub fn is_connected(&self) -> bool {
        let pairs: Vec<_> = self.edges.iter().map(|e| (e.a, e.b)).collect();
        crate::grid::is_connected(self.node_count, &pairs)
    }

    /// The cut induced by `side` (true = one side), weighted by this graph.
    pub fn cut_from_side(&self, side: &[bool]) -> CutResult<W> {
        CutResult::from_side(side, self.edges.iter().map(|e| (e.id, e.a, e.b, e.secure, e.weight)))
    }

    /// Dense symmetric matrix of merged `(weight, count)` keys.
    pub(crate) fn merged_keys(&self) -> Vec<Vec<Key<W>>> {
        let n = self.node_count;
        let mut m = vec![vec![Key::zero(); n]; n];
        for e in &self.edges {
            let k = Key::edge(e.weight);
            m[e.a][e.b] = m[e.a][e.b].add(k);
            m[e.b][e.a] = m[e.b][e.a].add(k);
        }
        m
    }
}

/// A bipartition of the graph and the edges crossing it.
///
/// `side_a` never contains the highest-index node (the reference node for
/// graphs built from a measurement system), so its indicator vector is a
/// valid state shift with a zero reference entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutResult<W> {
    pub side_a: BTreeSet<usize>,
    pub edges: BTreeSet<MeasurementId>,
    pub weight: Weight<W>,
    pub n_secure: usize,
    pub n_insecure: usize,
}

impl<W: Scalar> CutResult<W> {
    pub(crate) fn from_side(
        side: &[bool],
        edges: impl Iterator<Item = (MeasurementId, usize, usize, bool, Weight<W>)>,
    ) -> Self {
        let last = side.len() - 1;
        let flip = side[last];
        let side_a = (0..side.len()).filter(|&v| side[v] != flip).collect();
        let mut cut = CutResult {
            side_a,
            edges: BTreeSet::new(),
            weight: Weight::zero(),
            n_secure: 0,
            n_insecure: 0,
        };
        for (id, a, b, secure, w) in edges {
            if side[a] != side[b] {
                cut.edges.insert(id);
                cut.weight = cut.weight + w;
                if secure {
                    cut.n_secure += 1;
                } else {
                    cut.n_insecure += 1;
                }
            }
        }
        cut
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// 0-1 indicator of `side_a` over `node_count` nodes.
    pub fn indicator(&self, node_count: usize) -> Vec<bool> {
        (0..node_count).map(|v| self.side_a.contains(&v)).collect()
    }

    /// Same cut re-weighted by another weighting of the same edges.
    pub fn reweighted<V: Scalar>(&self, graph: &WeightedGraph<V>) -> CutResult<V> {
        CutResult {
            side_a: self.side_a.clone(),
            edges: self.edges.clone(),
            weight: graph
                .edges()
                .iter()
                .filter(|e| self.edges.contains(&e.id))
                .map(|e| e.weight)
                .sum(),
            n_secure: self.n_secure,
            n_insecure: self.n_insecure,
        }
    }
}

/// Lexicographic `(weight, edge count)` key. Forms an ordered abelian
/// group, so max-flow/min-cut duality and Stoer–Wagner both hold on it.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Key<W> {
    pub w: Weight<W>,
    pub n: i64,
}

impl<W: Scalar> Key<W> {
    pub fn zero() -> Self {
        Key { w: Weight::zero(), n: 0 }
    }

    pub fn edge(w: Weight<W>) -> Self {
        Key { w, n: 1 }
    }

    pub fn add(self, o: Self) -> Self {
        Key { w: self.w + o.w, n: self.n + o.n }
    }

    pub fn sub(self, o: Self) -> Self {
        Key { w: self.w.saturating_sub(o.w), n: self.n - o.n }
    }

    pub fn cmp(&self, o: &Self) -> Ordering {
        match self.w.cmp_tol(&o.w) {
            Ordering::Equal if self.w.is_finite() => self.n.cmp(&o.n),
            ord => ord,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.cmp(&Key::zero()) == Ordering::Greater
    }

    pub fn is_infinite(&self) -> bool {
        !self.w.is_finite()
    }
}
