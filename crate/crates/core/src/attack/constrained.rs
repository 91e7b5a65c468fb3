use std::cmp::Ordering;

use serde::Serialize;

use super::DesignError;
use crate::mincut::{global_min_cut, CutResult, WeightedGraph};
use crate::scalar::{Scalar, Weight};

/// Composition a constrained cut must have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CutConstraint {
    /// Secure edges are a strict minority.
    SecureMinority,
    /// Secure edges are a weak majority and at least one edge is insecure.
    SecureMajority,
}

impl CutConstraint {
    pub fn satisfied_by<W>(&self, cut: &CutResult<W>) -> bool {
        let len = cut.n_secure + cut.n_insecure;
        match self {
            CutConstraint::SecureMinority => 2 * cut.n_secure < len,
            CutConstraint::SecureMajority => cut.n_insecure > 0 && 2 * cut.n_insecure <= len,
        }
    }
}

/// Weight increase applied to an edge of the violating class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Boost {
    /// Exclude the edge from all later cuts.
    Infinite,
    /// Add the edge's current weight (double it). Zero-weight edges get the
    /// largest finite weight in the graph instead.
    Double,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DesignOptions<C> {
    pub beta: Boost,
    /// Stop once the current min-cut weight reaches this bound.
    pub gamma: Weight<C>,
    /// Maximum number of boosts; `None` means one per graph edge for
    /// [`Boost::Infinite`] and four per edge for [`Boost::Double`].
    pub max_boosts: Option<usize>,
}

impl<C: Scalar> Default for DesignOptions<C> {
    fn default() -> Self {
        DesignOptions { beta: Boost::Infinite, gamma: Weight::Infinite, max_boosts: None }
    }
}

/// Iterated global min-cut with weight boosting until the cut meets
/// `constraint`.
///
/// Each round boosts one edge of the violating class in the current cut:
/// a secure edge for [`CutConstraint::SecureMinority`], an insecure edge for
/// [`CutConstraint::SecureMajority`] (or a secure edge, to infinity, when
/// the cut has no insecure edge). Among candidates the lightest is boosted,
/// largest id first on ties. The returned cut is weighted by the original
/// `graph`. Failure is not a proof that no such cut exists.
pub fn constrained_min_cut<C: Scalar>(
    graph: &WeightedGraph<C>,
    constraint: CutConstraint,
    options: &DesignOptions<C>,
) -> Result<CutResult<C>, DesignError> {
    let mut current = graph.clone();
    let max_boosts = options.max_boosts.unwrap_or(match options.beta {
        Boost::Infinite => graph.edges().len(),
        Boost::Double => 4 * graph.edges().len(),
    });
    let fallback = graph
        .edges()
        .iter()
        .filter_map(|e| e.weight.finite())
        .fold(C::zero(), |a, w| if w > a { w } else { a });
    let fallback = if fallback > C::zero() { fallback } else { C::one() };

    for boosts in 0.. {
        let cut = global_min_cut(&current)?;
        if constraint.satisfied_by(&cut) {
            return Ok(cut.reweighted(graph));
        }
        if cut.weight.cmp_tol(&options.gamma) != Ordering::Less || boosts >= max_boosts {
            return Err(DesignError::NoSolutionFound);
        }
        let (want_secure, boost) = match constraint {
            CutConstraint::SecureMinority => (true, options.beta),
            CutConstraint::SecureMajority if cut.n_insecure == 0 => (true, Boost::Infinite),
            CutConstraint::SecureMajority => (false, options.beta),
        };
        let pick = current
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.secure == want_secure && cut.edges.contains(&e.id))
            .min_by(|(_, x), (_, y)| x.weight.cmp_tol(&y.weight).then(y.id.cmp(&x.id)))
            .map(|(i, _)| i)
            .ok_or(DesignError::NoSolutionFound)?;
        let edge = &mut current.edges_mut()[pick];
        edge.weight = match (boost, edge.weight) {
            (_, Weight::Infinite) => return Err(DesignError::NoSolutionFound),
            (Boost::Infinite, _) => Weight::Infinite,
            (Boost::Double, Weight::Finite(w)) if w > C::zero() => Weight::Finite(w + w),
            (Boost::Double, Weight::Finite(w)) => Weight::Finite(w + fallback),
        };
    }
    unreachable!("loop returns")
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::grid::MeasurementId;
    use crate::mincut::WeightedEdge;

    /// E1 triangle: e1 = (0,1) insecure, e2 = (0,ref) secure, e3 = (1,ref) insecure.
    fn e1(secure_w: f64, insecure_w: f64) -> WeightedGraph<f64> {
        let e = |id, a, b, secure: bool| WeightedEdge {
            id: MeasurementId(id),
            a,
            b,
            secure,
            weight: Weight::Finite(if secure { secure_w } else { insecure_w }),
        };
        WeightedGraph::new(3, vec![e(1, 0, 1, false), e(2, 0, 2, true), e(3, 1, 2, false)]).unwrap()
    }

    #[test]
    fn already_feasible_cut_returned_immediately() {
        let g = e1(2.0, 1.0);
        let opts = DesignOptions { max_boosts: Some(0), ..DesignOptions::default() };
        let cut = constrained_min_cut(&g, CutConstraint::SecureMinority, &opts).unwrap();
        assert_eq!(cut.n_secure, 0);
        assert_eq!(cut.weight, Weight::Finite(2.0));
    }

    #[test]
    fn e1_secure_majority() {
        let g = e1(0.8, 0.2);
        let opts = DesignOptions { gamma: Weight::Finite(10.0), ..DesignOptions::default() };
        let cut = constrained_min_cut(&g, CutConstraint::SecureMajority, &opts).unwrap();
        assert_eq!(cut.edges, BTreeSet::from([MeasurementId(1), MeasurementId(2)]));
        assert_eq!(cut.weight, Weight::Finite(1.0));
    }

    #[test]
    fn secure_majority_with_doubling() {
        let g = e1(0.8, 0.2);
        let opts = DesignOptions { beta: Boost::Double, ..DesignOptions::default() };
        let cut = constrained_min_cut(&g, CutConstraint::SecureMajority, &opts).unwrap();
        assert!(CutConstraint::SecureMajority.satisfied_by(&cut));
        assert_eq!(cut.weight, Weight::Finite(1.0));
    }

    #[test]
    fn all_secure_graph_has_no_majority_cut_with_insecure_edge() {
        let mut g = e1(1.0, 1.0);
        for e in g.edges_mut() {
            e.secure = true;
        }
        assert_eq!(
            constrained_min_cut(&g, CutConstraint::SecureMajority, &DesignOptions::default()),
            Err(DesignError::NoSolutionFound)
        );
    }

    #[test]
    fn gamma_stops_search() {
        let g = e1(0.8, 0.2);
        let opts = DesignOptions { gamma: Weight::Finite(0.1), ..DesignOptions::default() };
        assert_eq!(
            constrained_min_cut(&g, CutConstraint::SecureMajority, &opts),
            Err(DesignError::NoSolutionFound)
        );
    }
}
