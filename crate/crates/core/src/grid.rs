//! Grid topology, measurements, and the augmented measurement graph.
//!
//! Buses are indexed `0..n`; the reference bus is always index `n` and is
//! the last column of the measurement matrix. A phase-angle measurement is
//! treated as a flow on a unit line between its bus and the reference, so
//! every measurement becomes one edge of a multigraph over `n + 1` nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{DMatrix, RealField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mincut::CutResult;
use crate::scalar::{Scalar, Weight};

/// Stable identifier of a measurement; doubles as the edge id in the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementId(pub usize);

impl fmt::Display for MeasurementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("measurement system is unobservable: rank {rank} < {required}")]
    UnobservableSystem { rank: usize, required: usize },
    #[error("bus {0} does not exist")]
    UnknownBus(usize),
    #[error("line {0}-{1} is a self-loop")]
    SelfLoop(usize, usize),
    #[error("flow measurement {id} on {from}-{to} has no matching line")]
    NoSuchLine { id: MeasurementId, from: usize, to: usize },
    #[error("measurement id {0} is used more than once")]
    DuplicateMeasurement(MeasurementId),
    #[error("susceptance of {0} must be positive")]
    NonPositiveSusceptance(String),
    #[error("noise covariance needs {expected} positive entries, got {got}")]
    BadNoise { expected: usize, got: usize },
    #[error("node set must be a proper nonempty subset of the {0} graph nodes")]
    ImproperNodeSet(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub is_reference: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub from: usize,
    pub to: usize,
    pub susceptance: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeasurementKind {
    LineFlow { from: usize, to: usize },
    PhaseAngle { bus: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement<T> {
    pub id: MeasurementId,
    pub kind: MeasurementKind,
    pub susceptance: T,
    pub secure: bool,
}

impl<T: RealField + Copy> Measurement<T> {
    pub fn flow(id: usize, from: usize, to: usize, susceptance: T, secure: bool) -> Self {
        Measurement {
            id: MeasurementId(id),
            kind: MeasurementKind::LineFlow { from, to },
            susceptance,
            secure,
        }
    }

    /// Angle measurement: a unit-susceptance line to the reference bus.
    pub fn angle(id: usize, bus: usize, secure: bool) -> Self {
        Measurement {
            id: MeasurementId(id),
            kind: MeasurementKind::PhaseAngle { bus },
            susceptance: T::one(),
            secure,
        }
    }
}

/// Grid plus its measurement set and diagonal noise model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementSystem<T> {
    buses: Vec<Bus>,
    lines: Vec<Line<T>>,
    measurements: Vec<Measurement<T>>,
    noise_sigma: Vec<T>,
}

/// Default per-unit measurement noise standard deviation.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.01;

impl<T: RealField + Copy> MeasurementSystem<T> {
    /// Validates the topology and measurement set. Observability is not
    /// required here; [`build_matrix`] and [`build_graph`] check it.
    pub fn new(
        bus_count: usize,
        lines: Vec<Line<T>>,
        measurements: Vec<Measurement<T>>,
    ) -> Result<Self, GridError> {
        for line in &lines {
            if line.from >= bus_count {
                return Err(GridError::UnknownBus(line.from));
            }
            if line.to >= bus_count {
                return Err(GridError::UnknownBus(line.to));
            }
            if line.from == line.to {
                return Err(GridError::SelfLoop(line.from, line.to));
            }
            if line.susceptance <= T::zero() {
                return Err(GridError::NonPositiveSusceptance(format!(
                    "line {}-{}",
                    line.from, line.to
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for m in &measurements {
            if !seen.insert(m.id) {
                return Err(GridError::DuplicateMeasurement(m.id));
            }
            if m.susceptance <= T::zero() {
                return Err(GridError::NonPositiveSusceptance(format!("measurement {}", m.id)));
            }
            match m.kind {
                MeasurementKind::LineFlow { from, to } => {
                    if from >= bus_count {
                        return Err(GridError::UnknownBus(from));
                    }
                    if to >= bus_count {
                        return Err(GridError::UnknownBus(to));
                    }
                    let joined = lines.iter().any(|l| {
                        (l.from == from && l.to == to) || (l.from == to && l.to == from)
                    });
                    if from == to || !joined {
                        return Err(GridError::NoSuchLine { id: m.id, from, to });
                    }
                }
                MeasurementKind::PhaseAngle { bus } => {
                    if bus >= bus_count {
                        return Err(GridError::UnknownBus(bus));
                    }
                }
            }
        }
        let buses = (0..=bus_count)
            .map(|id| Bus { id, is_reference: id == bus_count })
            .collect();
        let sigma = nalgebra::convert(DEFAULT_NOISE_SIGMA);
        let noise_sigma = vec![sigma; measurements.len()];
        Ok(MeasurementSystem { buses, lines, measurements, noise_sigma })
    }

    /// Replaces the per-measurement noise standard deviations (the square
    /// roots of the diagonal of the covariance).
    pub fn with_noise_sigma(mut self, sigma: Vec<T>) -> Result<Self, GridError> {
        if sigma.len() != self.measurements.len() || sigma.iter().any(|s| *s <= T::zero()) {
            return Err(GridError::BadNoise { expected: self.measurements.len(), got: sigma.len() });
        }
        self.noise_sigma = sigma;
        Ok(self)
    }

    /// Number of non-reference buses.
    pub fn bus_count(&self) -> usize {
        self.buses.len() - 1
    }

    pub fn reference(&self) -> usize {
        self.bus_count()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line<T>] {
        &self.lines
    }

    pub fn measurements(&self) -> &[Measurement<T>] {
        &self.measurements
    }

    pub fn noise_sigma(&self) -> &[T] {
        &self.noise_sigma
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    /// Row index of each measurement id.
    pub fn row_index(&self) -> BTreeMap<MeasurementId, usize> {
        self.measurements.iter().enumerate().map(|(row, m)| (m.id, row)).collect()
    }

    /// Graph endpoints of a measurement, with the reference bus as node `n`.
    pub fn endpoints(&self, m: &Measurement<T>) -> (usize, usize) {
        match m.kind {
            MeasurementKind::LineFlow { from, to } => (from, to),
            MeasurementKind::PhaseAngle { bus } => (bus, self.reference()),
        }
    }

    /// Same grid with the given measurements deleted (jammed or removed).
    pub fn without(&self, removed: &BTreeSet<MeasurementId>) -> Self {
        let (measurements, noise_sigma) = self
            .measurements
            .iter()
            .zip(&self.noise_sigma)
            .filter(|(m, _)| !removed.contains(&m.id))
            .map(|(m, s)| (*m, *s))
            .unzip();
        MeasurementSystem {
            buses: self.buses.clone(),
            lines: self.lines.clone(),
            measurements,
            noise_sigma,
        }
    }

    /// Unit-susceptance system whose measurement graph is `graph`: edges
    /// to the last node become angle measurements, all others line flows on
    /// lines created for them.
    pub fn from_graph(graph: &MeasurementGraph) -> Result<Self, GridError> {
        let n = graph.node_count() - 1;
        let mut lines: Vec<Line<T>> = Vec::new();
        let mut measurements = Vec::with_capacity(graph.edges().len());
        for e in graph.edges() {
            if e.a == n || e.b == n {
                measurements.push(Measurement::angle(e.id.0, e.a.min(e.b), e.secure));
            } else {
                let (from, to) = (e.a.min(e.b), e.a.max(e.b));
                if !lines.iter().any(|l| l.from == from && l.to == to) {
                    lines.push(Line { from, to, susceptance: T::one() });
                }
                measurements.push(Measurement::flow(e.id.0, from, to, T::one(), e.secure));
            }
        }
        MeasurementSystem::new(n, lines, measurements)
    }

    /// Structural observability: the measurement graph spans every node.
    pub fn is_observable(&self) -> bool {
        let edges: Vec<_> = self.measurements.iter().map(|m| self.endpoints(m)).collect();
        is_connected(self.buses.len(), &edges)
    }
}

/// Builds the susceptance-weighted incidence matrix `H` (m × (n+1)) with
/// the reference column last.
pub fn build_matrix<T: RealField + Copy>(sys: &MeasurementSystem<T>) -> Result<DMatrix<T>, GridError> {
    let h = incidence_matrix(sys);
    let n = sys.bus_count();
    let rank = if h.nrows() == 0 { 0 } else { h.rank(nalgebra::convert(1e-9)) };
    if rank < n {
        return Err(GridError::UnobservableSystem { rank, required: n });
    }
    Ok(h)
}

/// `H` without the rank check, for subsystems that may be unobservable.
pub(crate) fn incidence_matrix<T: RealField + Copy>(sys: &MeasurementSystem<T>) -> DMatrix<T> {
    let mut h = DMatrix::zeros(sys.len(), sys.bus_count() + 1);
    for (row, m) in sys.measurements().iter().enumerate() {
        let (a, b) = sys.endpoints(m);
        h[(row, a)] = m.susceptance;
        h[(row, b)] = -m.susceptance;
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: MeasurementId,
    pub a: usize,
    pub b: usize,
    pub secure: bool,
}

/// Multigraph `G_H`: nodes are buses plus the reference (last), one edge
/// per measurement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementGraph {
    node_count: usize,
    edges: Vec<GraphEdge>,
}

impl MeasurementGraph {
    /// Builds a graph directly from edges; the last node is the reference.
    pub fn from_edges(node_count: usize, edges: Vec<GraphEdge>) -> Result<Self, GridError> {
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.a >= node_count {
                return Err(GridError::UnknownBus(e.a));
            }
            if e.b >= node_count {
                return Err(GridError::UnknownBus(e.b));
            }
            if e.a == e.b {
                return Err(GridError::SelfLoop(e.a, e.b));
            }
            if !seen.insert(e.id) {
                return Err(GridError::DuplicateMeasurement(e.id));
            }
        }
        Ok(MeasurementGraph { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn reference(&self) -> usize {
        self.node_count - 1
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn edge(&self, id: MeasurementId) -> Option<&GraphEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn secure_count(&self) -> usize {
        self.edges.iter().filter(|e| e.secure).count()
    }

    pub fn insecure_count(&self) -> usize {
        self.edges.len() - self.secure_count()
    }

    pub fn is_connected(&self) -> bool {
        let pairs: Vec<_> = self.edges.iter().map(|e| (e.a, e.b)).collect();
        is_connected(self.node_count, &pairs)
    }

    /// Edges crossing the bipartition `(node_set, complement)`, weighted by
    /// `weight`.
    pub fn cut_edges<W: Scalar>(
        &self,
        node_set: &BTreeSet<usize>,
        weight: impl Fn(&GraphEdge) -> Weight<W>,
    ) -> Result<CutResult<W>, GridError> {
        if node_set.is_empty()
            || node_set.len() >= self.node_count
            || node_set.iter().any(|&v| v >= self.node_count)
        {
            return Err(GridError::ImproperNodeSet(self.node_count));
        }
        let side: Vec<bool> = (0..self.node_count).map(|v| node_set.contains(&v)).collect();
        let cut = CutResult::from_side(
            &side,
            self.edges.iter().map(|e| (e.id, e.a, e.b, e.secure, weight(e))),
        );
        debug_assert!(!self.is_connected() || !cut.edges.is_empty());
        Ok(cut)
    }
}

/// Builds `G_H` from a measurement system.
pub fn build_graph<T: RealField + Copy>(sys: &MeasurementSystem<T>) -> Result<MeasurementGraph, GridError> {
    let edges = sys
        .measurements()
        .iter()
        .map(|m| {
            let (a, b) = sys.endpoints(m);
            GraphEdge { id: m.id, a, b, secure: m.secure }
        })
        .collect();
    let graph = MeasurementGraph { node_count: sys.bus_count() + 1, edges };
    if !graph.is_connected() {
        let rank = incidence_matrix(sys).rank(nalgebra::convert(1e-9));
        return Err(GridError::UnobservableSystem { rank, required: sys.bus_count() });
    }
    Ok(graph)
}

/// BFS connectivity over an edge list.
pub(crate) fn is_connected(node_count: usize, edges: &[(usize, usize)]) -> bool {
    if node_count <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); node_count];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; node_count];
    let mut stack = vec![0];
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                reached += 1;
                stack.push(u);
            }
        }
    }
    reached == node_count
}
