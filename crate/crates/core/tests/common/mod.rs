#![allow(dead_code)]

use gridjam::grid::{GraphEdge, MeasurementGraph, MeasurementId, MeasurementSystem};
use gridjam::{Cost, CostInterval, CostModel};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random connected multigraph; the last node is the reference. Edge ids
/// are `0..m` in shuffled order.
pub fn random_graph(rng: &mut ChaCha8Rng, nodes: (usize, usize), edges: (usize, usize), secure_p: f64) -> MeasurementGraph {
    let n = rng.random_range(nodes.0..=nodes.1);
    let m = rng.random_range(edges.0.max(n - 1)..=edges.1.max(n - 1));
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    while pairs.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.push((a, b));
        }
    }
    pairs.shuffle(rng);
    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| GraphEdge { id: MeasurementId(i), a, b, secure: rng.random_bool(secure_p) })
        .collect();
    MeasurementGraph::from_edges(n, edges).unwrap()
}

/// Same graph with every edge secure except the listed ids.
pub fn with_security(graph: &MeasurementGraph, insecure: &[MeasurementId]) -> MeasurementGraph {
    let edges = graph.edges().iter().map(|e| GraphEdge { secure: !insecure.contains(&e.id), ..*e }).collect();
    MeasurementGraph::from_edges(graph.node_count(), edges).unwrap()
}

pub fn system(graph: &MeasurementGraph) -> MeasurementSystem<f64> {
    MeasurementSystem::from_graph(graph).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, nodes: usize) -> DVector<f64> {
    DVector::from_fn(nodes, |i, _| if i + 1 == nodes { 0.0 } else { rng.random_range(-0.1..0.1) })
}

/// Random valid cost triple inside `interval`, with injection cost in
/// [0.5, 2]. With `grid`, values are multiples of 0.05 to provoke ties.
pub fn random_cost(rng: &mut ChaCha8Rng, interval: CostInterval, grid: bool) -> Cost {
    loop {
        let pi: f64 = if grid { 1.0 } else { rng.random_range(0.5..2.0) };
        let (pjsc, pjs) = match interval {
            CostInterval::I => {
                let pjsc = rng.random_range(0.5..=1.0) * pi;
                (pjsc, rng.random_range(pjsc..=pi))
            }
            CostInterval::II => {
                let pjsc = rng.random_range(0.02..0.5) * pi;
                (pjsc, rng.random_range((pi - pjsc).max(pjsc)..=pi))
            }
            CostInterval::III => {
                let pjsc = rng.random_range(0.02..0.5) * pi;
                (pjsc, rng.random_range(pjsc..(pi - pjsc)))
            }
        };
        let snap = |x: f64| if grid { (x * 20.0).round() / 20.0 } else { x };
        if let Ok(c) = CostModel::new(snap(pi), snap(pjs), snap(pjsc)) {
            if c.interval() == interval {
                return c;
            }
        }
    }
}

/// `count` triples cycling through the three intervals; every fourth one
/// is grid-valued.
pub fn cost_set(rng: &mut ChaCha8Rng, count: usize) -> Vec<Cost> {
    let intervals = [CostInterval::I, CostInterval::II, CostInterval::III];
    (0..count).map(|k| random_cost(rng, intervals[k % 3], k % 4 == 3)).collect()
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}
