//! Exhaustive ground truth for small instances: every cut, every admissible
//! action count.

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

use crate::attack::{AttackPlan, AttackType, Construction, CostModel};
use crate::grid::{is_connected, MeasurementGraph};
use crate::mincut::{enumerate_cuts, CutResult, WeightedGraph};
use crate::scalar::{cmp_tol, Scalar, Weight};

pub const ORACLE_MAX_NODES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph has {nodes} nodes, oracle limit is {max}")]
    TooLarge { nodes: usize, max: usize },
    #[error("no admissible attack exists")]
    Infeasible,
}

/// Whether counts `(inject, jam_insecure, jam_secure)` on a cut with the
/// given composition form an admissible attack of type `t`.
pub fn admissible(t: AttackType, n_secure: usize, n_insecure: usize, counts: (usize, usize, usize)) -> bool {
    let (i, j, s) = counts;
    let len = n_secure + n_insecure;
    if i == 0 || i + j > n_insecure || s > n_secure {
        return false;
    }
    let touches_all = i + j == n_insecure && s == n_secure;
    let majority = 2 * i > len - j - s;
    match t {
        AttackType::HiddenInjection => n_secure == 0 && touches_all && j == 0,
        AttackType::HiddenJamming => n_secure == 0 && touches_all,
        AttackType::HiddenGeneralized => touches_all,
        AttackType::DetectableInjection => j == 0 && s == 0 && majority,
        AttackType::DetectableJamming => s == 0 && majority,
        AttackType::DetectableGeneralized => majority,
    }
}

/// Cheapest admissible counts on a cut, ties broken towards fewer actions.
pub fn cheapest_counts<C: Scalar>(
    t: AttackType,
    n_secure: usize,
    n_insecure: usize,
    cost: &CostModel<C>,
) -> Option<((usize, usize, usize), C)> {
    let mut best: Option<((usize, usize, usize), C)> = None;
    for i in 1..=n_insecure {
        for j in 0..=n_insecure - i {
            for s in 0..=n_secure {
                if !admissible(t, n_secure, n_insecure, (i, j, s)) {
                    continue;
                }
                let c = cost.action_cost(i, j, s);
                let better = best.is_none_or(|((bi, bj, bs), bc)| match cmp_tol(c, bc) {
                    Ordering::Less => true,
                    Ordering::Equal => i + j + s < bi + bj + bs,
                    Ordering::Greater => false,
                });
                if better {
                    best = Some(((i, j, s), c));
                }
            }
        }
    }
    best
}

fn is_bond(graph: &MeasurementGraph, cut: &CutResult<impl Scalar>) -> bool {
    let n = graph.node_count();
    let side = cut.indicator(n);
    let inside: Vec<usize> = (0..n).filter(|&v| side[v]).collect();
    let outside: Vec<usize> = (0..n).filter(|&v| !side[v]).collect();
    [inside, outside].iter().all(|nodes| {
        let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let pairs: Vec<(usize, usize)> = graph
            .edges()
            .iter()
            .filter_map(|e| Some((*local.get(&e.a)?, *local.get(&e.b)?)))
            .collect();
        is_connected(nodes.len(), &pairs)
    })
}

/// Minimum cost of an attack of type `attack_type`, with a plan achieving
/// it. The plan's cut is weighted by cardinality.
///
/// Among optimal cuts, one whose two sides are both connected is returned
/// when available, so that jamming and removal leave the system observable.
pub fn optimal_cost<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
    attack_type: AttackType,
) -> Result<(C, AttackPlan<C>), OracleError> {
    let nodes = graph.node_count();
    if nodes > ORACLE_MAX_NODES {
        return Err(OracleError::TooLarge { nodes, max: ORACLE_MAX_NODES });
    }
    let wg = WeightedGraph::from_graph(graph, |_| Weight::<C>::one());
    let cuts = enumerate_cuts(&wg, ORACLE_MAX_NODES).map_err(|_| OracleError::Infeasible)?;
    let mut memo: HashMap<(usize, usize), Option<((usize, usize, usize), C)>> = HashMap::new();
    let mut best: Option<(C, bool, (usize, usize, usize), CutResult<C>)> = None;
    for cut in cuts {
        let key = (cut.n_secure, cut.n_insecure);
        let Some((counts, c)) = *memo.entry(key).or_insert_with(|| cheapest_counts(attack_type, key.0, key.1, cost))
        else {
            continue;
        };
        let replace = match &best {
            None => true,
            Some((bc, bond, _, _)) => match cmp_tol(c, *bc) {
                Ordering::Less => true,
                Ordering::Equal => !bond && is_bond(graph, &cut),
                Ordering::Greater => false,
            },
        };
        if replace {
            let bond = is_bond(graph, &cut);
            best = Some((c, bond, counts, cut));
        }
    }
    let (c, _, (i, j, s), cut) = best.ok_or(OracleError::Infeasible)?;
    let construction = Construction::Explicit { inject: i, jam_insecure: j, jam_secure: s };
    let plan = AttackPlan::build(attack_type, construction, cut, graph, cost).ok_or(OracleError::Infeasible)?;
    Ok((c, plan))
}
