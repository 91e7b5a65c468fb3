use std::cmp::Ordering;

use super::constrained::{constrained_min_cut, CutConstraint, DesignOptions};
use super::{classify_interval, AttackPlan, AttackType, Construction, CostInterval, CostModel, DesignError};
use crate::grid::{GraphEdge, MeasurementGraph};
use crate::mincut::{min_st_cut, CutResult, WeightedGraph};
use crate::scalar::{Scalar, Weight};

fn precheck<C: Scalar>(graph: &MeasurementGraph, cost: &CostModel<C>) -> Result<CostInterval, DesignError> {
    let interval = classify_interval(cost)?;
    if !graph.is_connected() {
        return Err(DesignError::Disconnected);
    }
    Ok(interval)
}

fn by_class<C: Scalar>(secure: Weight<C>, insecure: Weight<C>) -> impl Fn(&GraphEdge) -> Weight<C> {
    move |e| if e.secure { secure } else { insecure }
}

/// Lighter weight first, then fewer edges.
fn lighter<C: Scalar>(a: &CutResult<C>, b: &CutResult<C>) -> bool {
    match a.weight.cmp_tol(&b.weight) {
        Ordering::Less => true,
        Ordering::Equal => a.len() < b.len(),
        Ordering::Greater => false,
    }
}

/// Lightest finite cut through some insecure edge: one min s-t cut per
/// insecure edge, separating its endpoints.
fn lightest_insecure_cut<C: Scalar>(wg: &WeightedGraph<C>) -> Result<Option<CutResult<C>>, DesignError> {
    let mut best: Option<CutResult<C>> = None;
    for e in wg.edges().iter().filter(|e| !e.secure) {
        let cut = min_st_cut(wg, e.a, e.b)?;
        if cut.weight.is_finite() && best.as_ref().is_none_or(|b| lighter(&cut, b)) {
            best = Some(cut);
        }
    }
    Ok(best)
}

fn finish<C: Scalar>(
    attack_type: AttackType,
    construction: Construction,
    cut: CutResult<C>,
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
) -> Result<AttackPlan<C>, DesignError> {
    AttackPlan::build(attack_type, construction, cut, graph, cost).ok_or(DesignError::Infeasible)
}

fn secure_free_cut<C: Scalar>(graph: &MeasurementGraph) -> Result<CutResult<C>, DesignError> {
    let wg = WeightedGraph::from_graph(graph, by_class(Weight::Infinite, Weight::one()));
    lightest_insecure_cut(&wg)?.ok_or(DesignError::Infeasible)
}

/// Hidden injection: inject every edge of the minimum-cardinality cut that
/// has no secure edge.
pub fn hidden_injection<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
) -> Result<AttackPlan<C>, DesignError> {
    precheck(graph, cost)?;
    let cut = secure_free_cut(graph)?;
    finish(AttackType::HiddenInjection, Construction::InjectAll, cut, graph, cost)
}

/// Hidden jamming: same cut as hidden injection, one edge injected and the
/// rest jammed.
pub fn hidden_jamming<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
) -> Result<AttackPlan<C>, DesignError> {
    precheck(graph, cost)?;
    let cut = secure_free_cut(graph)?;
    finish(AttackType::HiddenJamming, Construction::InjectOneJamInsecure, cut, graph, cost)
}

/// Hidden generalized attack (exact). Secure edges weigh the secure jamming
/// cost and insecure edges the insecure one; the lightest cut containing an
/// insecure edge gets one injection and jams everywhere else.
pub fn hidden_generalized<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
) -> Result<AttackPlan<C>, DesignError> {
    precheck(graph, cost)?;
    let wg = WeightedGraph::from_graph(
        graph,
        by_class(Weight::Finite(cost.jam_secure), Weight::Finite(cost.jam_insecure)),
    );
    let cut = lightest_insecure_cut(&wg)?.ok_or(DesignError::Infeasible)?;
    finish(AttackType::HiddenGeneralized, Construction::InjectOneJamRest, cut, graph, cost)
}

/// Detectable injection: minimum-cardinality cut with a secure minority,
/// found by the constrained search on unit weights.
pub fn detectable_injection<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
    options: &DesignOptions<C>,
) -> Result<AttackPlan<C>, DesignError> {
    precheck(graph, cost)?;
    if graph.insecure_count() == 0 {
        return Err(DesignError::Infeasible);
    }
    let wg = WeightedGraph::from_graph(graph, |_| Weight::one());
    let cut = constrained_min_cut(&wg, CutConstraint::SecureMinority, options)?;
    finish(AttackType::DetectableInjection, Construction::InjectMajority, cut, graph, cost)
}

/// Secure-minority sub-problem for the detectable jamming and generalized
/// designs. Cheap insecure jamming (below half an injection) weighs secure
/// edges `p_I - p_J^Sc` and insecure edges `p_J^Sc`; otherwise unit weights.
fn secure_minority_plan<C: Scalar>(
    attack_type: AttackType,
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
    options: &DesignOptions<C>,
) -> Result<AttackPlan<C>, DesignError> {
    let cheap = cost.jam_insecure + cost.jam_insecure < cost.inject;
    let (weights, construction) = if cheap {
        (
            by_class(Weight::Finite(cost.inject - cost.jam_insecure), Weight::Finite(cost.jam_insecure)),
            Construction::OutvoteSecure,
        )
    } else {
        (by_class(Weight::one(), Weight::one()), Construction::MinCardinalityMajority)
    };
    let wg = WeightedGraph::from_graph(graph, weights);
    let cut = constrained_min_cut(&wg, CutConstraint::SecureMinority, options)?;
    finish(attack_type, construction, cut, graph, cost)
}

/// Detectable jamming: injections and insecure jamming only.
pub fn detectable_jamming<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
    options: &DesignOptions<C>,
) -> Result<AttackPlan<C>, DesignError> {
    precheck(graph, cost)?;
    if graph.insecure_count() == 0 {
        return Err(DesignError::Infeasible);
    }
    secure_minority_plan(AttackType::DetectableJamming, graph, cost, options)
}

/// Best detectable generalized construction for a cut of the given
/// composition under `interval`, or `None` if the cut has no insecure edge.
pub fn best_detectable_construction(
    interval: CostInterval,
    n_secure: usize,
    n_insecure: usize,
) -> Option<Construction> {
    if n_insecure == 0 {
        return None;
    }
    let secure_minority = n_secure < n_insecure;
    Some(match interval {
        CostInterval::III => Construction::InjectOneJamRest,
        CostInterval::I if secure_minority => Construction::MinCardinalityMajority,
        CostInterval::II if secure_minority => Construction::OutvoteSecure,
        CostInterval::I | CostInterval::II => Construction::JamSecureMajority,
    })
}

/// Detectable generalized attack, dispatched on the cost interval.
///
/// Intervals I and II solve a secure-minority and a secure-majority
/// constrained cut and keep the cheaper plan; interval III reuses the
/// hidden generalized cut with one injection.
pub fn detectable_generalized<C: Scalar>(
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
    options: &DesignOptions<C>,
) -> Result<AttackPlan<C>, DesignError> {
    let interval = precheck(graph, cost)?;
    if graph.insecure_count() == 0 {
        return Err(DesignError::Infeasible);
    }
    if interval == CostInterval::III {
        let hidden = hidden_generalized(graph, cost)?;
        return finish(
            AttackType::DetectableGeneralized,
            Construction::InjectOneJamRest,
            hidden.cut,
            graph,
            cost,
        );
    }

    let minority = secure_minority_plan(AttackType::DetectableGeneralized, graph, cost, options);
    let majority_graph = WeightedGraph::from_graph(
        graph,
        by_class(Weight::Finite(cost.jam_secure), Weight::Finite(cost.inject - cost.jam_secure)),
    );
    let majority = constrained_min_cut(&majority_graph, CutConstraint::SecureMajority, options).and_then(|cut| {
        finish(AttackType::DetectableGeneralized, Construction::JamSecureMajority, cut, graph, cost)
    });

    let candidates: Vec<AttackPlan<C>> = [minority, majority]
        .into_iter()
        .filter_map(|r| match r {
            Ok(plan) => Some(Ok(plan)),
            Err(DesignError::NoSolutionFound) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_, _>>()?;
    candidates
        .into_iter()
        .reduce(|best, p| if crate::scalar::cmp_tol(p.total_cost, best.total_cost).is_lt() { p } else { best })
        .ok_or(DesignError::NoSolutionFound)
}

/// Runs the designer for `attack_type`.
pub fn design_attack<C: Scalar>(
    attack_type: AttackType,
    graph: &MeasurementGraph,
    cost: &CostModel<C>,
    options: &DesignOptions<C>,
) -> Result<AttackPlan<C>, DesignError> {
    match attack_type {
        AttackType::HiddenInjection => hidden_injection(graph, cost),
        AttackType::DetectableInjection => detectable_injection(graph, cost, options),
        AttackType::HiddenJamming => hidden_jamming(graph, cost),
        AttackType::DetectableJamming => detectable_jamming(graph, cost, options),
        AttackType::HiddenGeneralized => hidden_generalized(graph, cost),
        AttackType::DetectableGeneralized => detectable_generalized(graph, cost, options),
    }
}
