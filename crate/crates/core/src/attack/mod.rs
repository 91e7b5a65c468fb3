//! Attack constructors: injection, jamming, and generalized attacks, each
//! in a hidden and a detectable flavour.
//!
//! Every attack is a cut of the measurement graph. A plan assigns each cut
//! edge one action (inject, jam, or leave untouched), and its cost depends
//! only on how many edges get each action.

mod constrained;
mod design;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{MeasurementGraph, MeasurementId};
use crate::mincut::{CutError, CutResult};
use crate::scalar::Scalar;

pub use constrained::{constrained_min_cut, Boost, CutConstraint, DesignOptions};
pub use design::{
    best_detectable_construction, design_attack, detectable_generalized, detectable_injection, detectable_jamming,
    hidden_generalized, hidden_injection, hidden_jamming,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid costs: {0}")]
    InvalidCosts(String),
    #[error("no feasible attack exists")]
    Infeasible,
    #[error("constrained cut search found no solution")]
    NoSolutionFound,
    #[error("measurement graph is disconnected")]
    Disconnected,
    #[error(transparent)]
    Cut(#[from] CutError),
}

/// Unit costs of the three adversarial actions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostModel<C> {
    pub inject: C,
    pub jam_secure: C,
    pub jam_insecure: C,
}

impl<C: Scalar> CostModel<C> {
    /// Checks positivity and `jam_insecure <= jam_secure <= inject`.
    pub fn new(inject: C, jam_secure: C, jam_insecure: C) -> Result<Self, DesignError> {
        let cost = CostModel { inject, jam_secure, jam_insecure };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.jam_insecure > C::zero()) {
            return Err(DesignError::InvalidCosts(format!(
                "jamming cost {} must be positive",
                self.jam_insecure
            )));
        }
        if !(self.jam_insecure <= self.jam_secure && self.jam_secure <= self.inject) {
            return Err(DesignError::InvalidCosts(format!(
                "need p_jam_insecure <= p_jam_secure <= p_inject, got {} / {} / {}",
                self.jam_insecure, self.jam_secure, self.inject
            )));
        }
        Ok(())
    }

    pub fn interval(&self) -> CostInterval {
        let p = *self;
        if p.jam_insecure + p.jam_insecure >= p.inject {
            CostInterval::I
        } else if p.jam_secure + p.jam_insecure >= p.inject {
            CostInterval::II
        } else {
            CostInterval::III
        }
    }

    /// Cost of injecting, jamming insecure, and jamming secure edges.
    pub fn action_cost(&self, inject: usize, jam_insecure: usize, jam_secure: usize) -> C {
        self.inject * C::from_count(inject)
            + self.jam_insecure * C::from_count(jam_insecure)
            + self.jam_secure * C::from_count(jam_secure)
    }

    /// Converts to another scalar type through `f64`.
    pub fn to_f64(&self) -> CostModel<f64> {
        CostModel {
            inject: self.inject.to_f64().unwrap_or(f64::NAN),
            jam_secure: self.jam_secure.to_f64().unwrap_or(f64::NAN),
            jam_insecure: self.jam_insecure.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// Region of relative costs with a distinct optimal detectable design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CostInterval {
    /// Jamming an insecure edge costs at least half an injection.
    I,
    /// Cheap insecure jamming, but a secure plus an insecure jam cost at
    /// least one injection.
    II,
    /// Jamming a secure/insecure pair is cheaper than one injection.
    III,
}

impl fmt::Display for CostInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostInterval::I => "I",
            CostInterval::II => "II",
            CostInterval::III => "III",
        })
    }
}

/// Validates `cost` and returns its interval. Boundary costs fall into
/// interval I (`>=`) exactly as the interval definitions read.
pub fn classify_interval<C: Scalar>(cost: &CostModel<C>) -> Result<CostInterval, DesignError> {
    cost.validate()?;
    Ok(cost.interval())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackType {
    HiddenInjection,
    DetectableInjection,
    HiddenJamming,
    DetectableJamming,
    HiddenGeneralized,
    DetectableGeneralized,
}

impl AttackType {
    pub const ALL: [AttackType; 6] = [
        AttackType::HiddenInjection,
        AttackType::DetectableInjection,
        AttackType::HiddenJamming,
        AttackType::DetectableJamming,
        AttackType::HiddenGeneralized,
        AttackType::DetectableGeneralized,
    ];

    pub fn is_hidden(&self) -> bool {
        matches!(
            self,
            AttackType::HiddenInjection | AttackType::HiddenJamming | AttackType::HiddenGeneralized
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AttackType::HiddenInjection => "hidden-injection",
            AttackType::DetectableInjection => "detectable-injection",
            AttackType::HiddenJamming => "hidden-jamming",
            AttackType::DetectableJamming => "detectable-jamming",
            AttackType::HiddenGeneralized => "hidden-generalized",
            AttackType::DetectableGeneralized => "detectable-generalized",
        }
    }

    /// Two-letter abbreviation (HI, DI, HJ, DJ, HG, DG).
    pub fn short(&self) -> &'static str {
        match self {
            AttackType::HiddenInjection => "HI",
            AttackType::DetectableInjection => "DI",
            AttackType::HiddenJamming => "HJ",
            AttackType::DetectableJamming => "DJ",
            AttackType::HiddenGeneralized => "HG",
            AttackType::DetectableGeneralized => "DG",
        }
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        AttackType::ALL
            .into_iter()
            .find(|t| t.as_str() == lower || t.short().eq_ignore_ascii_case(&lower))
            .ok_or_else(|| format!("unknown attack type `{s}`"))
    }
}

/// How a plan distributes actions over its cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Inject every cut edge (cut has no secure edge).
    InjectAll,
    /// Inject one edge, jam the other (insecure) edges.
    InjectOneJamInsecure,
    /// Inject one insecure edge and jam every other cut edge.
    InjectOneJamRest,
    /// Inject `floor(1 + |C|/2)` insecure edges, leave the rest.
    InjectMajority,
    /// Inject `floor((1 + |C|)/2)` and jam `1 - |C| mod 2` insecure edges.
    MinCardinalityMajority,
    /// Inject `n_secure + 1` insecure edges, jam the other insecure edges.
    OutvoteSecure,
    /// Inject all insecure edges, jam `n_secure + 1 - n_insecure` secure edges.
    JamSecureMajority,
    /// Counts chosen by exhaustive search.
    Explicit { inject: usize, jam_insecure: usize, jam_secure: usize },
}

impl Construction {
    /// `(inject, jam_insecure, jam_secure)` for a cut with the given
    /// composition, or `None` when the construction does not apply.
    pub fn counts(&self, n_secure: usize, n_insecure: usize) -> Option<(usize, usize, usize)> {
        let len = n_secure + n_insecure;
        let counts = match *self {
            Construction::InjectAll => (n_secure == 0 && n_insecure > 0).then_some((n_insecure, 0, 0))?,
            Construction::InjectOneJamInsecure => {
                (n_secure == 0 && n_insecure > 0).then(|| (1, n_insecure - 1, 0))?
            }
            Construction::InjectOneJamRest => (n_insecure > 0).then(|| (1, n_insecure - 1, n_secure))?,
            Construction::InjectMajority => {
                let k = 1 + len / 2;
                (k <= n_insecure).then_some((k, 0, 0))?
            }
            Construction::MinCardinalityMajority => {
                let (k, j) = (len.div_ceil(2), 1 - len % 2);
                (2 * n_secure < len).then_some((k, j, 0))?
            }
            Construction::OutvoteSecure => {
                (n_insecure > n_secure).then(|| (n_secure + 1, n_insecure - n_secure - 1, 0))?
            }
            Construction::JamSecureMajority => {
                (n_insecure > 0 && n_secure >= n_insecure)
                    .then(|| (n_insecure, 0, n_secure + 1 - n_insecure))?
            }
            Construction::Explicit { inject, jam_insecure, jam_secure } => {
                (inject + jam_insecure <= n_insecure && jam_secure <= n_secure)
                    .then_some((inject, jam_insecure, jam_secure))?
            }
        };
        Some(counts)
    }

    /// Closed-form plan cost as a function of the cut composition.
    pub fn closed_form_cost<C: Scalar>(
        &self,
        n_secure: usize,
        n_insecure: usize,
        cost: &CostModel<C>,
    ) -> Option<C> {
        self.counts(n_secure, n_insecure)?;
        let c = |k: usize| C::from_count(k);
        let (pi, pjs, pjsc) = (cost.inject, cost.jam_secure, cost.jam_insecure);
        let len = n_secure + n_insecure;
        Some(match *self {
            Construction::InjectAll => pi * c(len),
            Construction::InjectOneJamInsecure => pi + pjsc * c(len - 1),
            Construction::InjectOneJamRest => pjs * c(n_secure) + pjsc * c(n_insecure) + (pi - pjsc),
            Construction::InjectMajority => pi * c(1 + len / 2),
            Construction::MinCardinalityMajority => pi * c(len.div_ceil(2)) + pjsc * c(1 - len % 2),
            Construction::OutvoteSecure => (pi - pjsc) * c(n_secure + 1) + pjsc * c(n_insecure),
            Construction::JamSecureMajority => pjs * c(n_secure) + (pi - pjs) * c(n_insecure) + pjs,
            Construction::Explicit { inject, jam_insecure, jam_secure } => {
                cost.action_cost(inject, jam_insecure, jam_secure)
            }
        })
    }
}

/// A concrete attack: a cut plus one action per touched cut edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackPlan<C> {
    pub attack_type: AttackType,
    pub construction: Construction,
    /// The cut, weighted as it was found by the designer.
    pub cut: CutResult<C>,
    pub injected: BTreeSet<MeasurementId>,
    pub jammed_insecure: BTreeSet<MeasurementId>,
    pub jammed_secure: BTreeSet<MeasurementId>,
    /// 0-1 indicator of the shifted side over all graph nodes; the
    /// reference entry is always `false`.
    pub state_shift: Vec<bool>,
    pub total_cost: C,
}

impl<C: Scalar> AttackPlan<C> {
    /// Applies `construction` to `cut`, choosing the lowest-id edges for
    /// each action (injections first, then jams).
    pub fn build(
        attack_type: AttackType,
        construction: Construction,
        cut: CutResult<C>,
        graph: &MeasurementGraph,
        cost: &CostModel<C>,
    ) -> Option<Self> {
        let (n_inject, n_jam_insecure, n_jam_secure) = construction.counts(cut.n_secure, cut.n_insecure)?;
        let (secure, insecure): (Vec<MeasurementId>, Vec<MeasurementId>) =
            cut.edges.iter().partition(|id| graph.edge(**id).is_some_and(|e| e.secure));
        let injected: BTreeSet<_> = insecure[..n_inject].iter().copied().collect();
        let jammed_insecure = insecure[n_inject..n_inject + n_jam_insecure].iter().copied().collect();
        let jammed_secure = secure[..n_jam_secure].iter().copied().collect();
        let state_shift = cut.indicator(graph.node_count());
        Some(AttackPlan {
            attack_type,
            construction,
            cut,
            injected,
            jammed_insecure,
            jammed_secure,
            state_shift,
            total_cost: cost.action_cost(n_inject, n_jam_insecure, n_jam_secure),
        })
    }

    pub fn jammed(&self) -> BTreeSet<MeasurementId> {
        self.jammed_insecure.union(&self.jammed_secure).copied().collect()
    }

    /// Cut edges that are neither injected nor jammed.
    pub fn untouched(&self) -> BTreeSet<MeasurementId> {
        let jammed = self.jammed();
        self.cut
            .edges
            .iter()
            .filter(|id| !self.injected.contains(id) && !jammed.contains(id))
            .copied()
            .collect()
    }

    /// Cost recomputed from the action sets.
    pub fn recomputed_cost(&self, cost: &CostModel<C>) -> C {
        cost.action_cost(self.injected.len(), self.jammed_insecure.len(), self.jammed_secure.len())
    }

    /// Checks the structural invariants against the graph; returns the
    /// first violation.
    pub fn check(&self, graph: &MeasurementGraph, cost: &CostModel<C>) -> Result<(), String> {
        let secure_of = |id: &MeasurementId| graph.edge(*id).map(|e| e.secure);
        for id in self.injected.iter().chain(&self.jammed_insecure) {
            if secure_of(id) != Some(false) {
                return Err(format!("{id} is not an insecure measurement"));
            }
        }
        for id in &self.jammed_secure {
            if secure_of(id) != Some(true) {
                return Err(format!("{id} is not a secure measurement"));
            }
        }
        let jammed = self.jammed();
        if !self.injected.is_disjoint(&jammed) || !self.jammed_insecure.is_disjoint(&self.jammed_secure) {
            return Err("an edge is both injected and jammed".into());
        }
        if self.injected.iter().chain(&jammed).any(|id| !self.cut.edges.contains(id)) {
            return Err("a touched edge lies outside the cut".into());
        }
        let expected = CutResult::<C>::from_side(
            &self.state_shift,
            graph.edges().iter().map(|e| (e.id, e.a, e.b, e.secure, crate::scalar::Weight::zero())),
        );
        if expected.edges != self.cut.edges || self.state_shift[graph.reference()] {
            return Err("state shift does not induce the cut".into());
        }
        if self.injected.is_empty() {
            return Err("no injected measurement".into());
        }
        let survivors = self.cut.edges.len() - jammed.len();
        if self.attack_type.is_hidden() {
            if survivors != self.injected.len() {
                return Err("hidden plan leaves untouched cut edges".into());
            }
        } else if 2 * self.injected.len() <= survivors {
            return Err("injected edges are not a strict majority of surviving cut edges".into());
        }
        let recomputed = self.recomputed_cost(cost);
        if crate::scalar::cmp_tol(recomputed, self.total_cost).is_ne() {
            return Err(format!("total cost {} != recomputed {}", self.total_cost, recomputed));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use num_rational::Ratio;

    use super::*;

    fn cost(pi: f64, pjs: f64, pjsc: f64) -> CostModel<f64> {
        CostModel::new(pi, pjs, pjsc).unwrap()
    }

    #[test]
    fn classifies_reported_cost_triples() {
        assert_eq!(classify_interval(&cost(1.0, 0.8, 0.6)), Ok(CostInterval::I));
        assert_eq!(classify_interval(&cost(1.0, 0.8, 0.25)), Ok(CostInterval::II));
        assert_eq!(classify_interval(&cost(1.0, 0.5, 0.25)), Ok(CostInterval::III));
    }

    #[test]
    fn boundaries_follow_inclusive_signs() {
        assert_eq!(cost(1.0, 0.5, 0.5).interval(), CostInterval::I);
        assert_eq!(cost(1.0, 0.75, 0.25).interval(), CostInterval::II);
        let r = |a, b| Ratio::new(a, b);
        let exact = CostModel::new(r(1i64, 1), r(2, 3), r(1, 3)).unwrap();
        assert_eq!(exact.interval(), CostInterval::II);
    }

    #[test]
    fn rejects_out_of_order_costs() {
        assert!(matches!(CostModel::new(1.0, 0.2, 0.5), Err(DesignError::InvalidCosts(_))));
        assert!(matches!(CostModel::new(0.5, 0.8, 0.2), Err(DesignError::InvalidCosts(_))));
        assert!(matches!(CostModel::new(1.0, 0.5, 0.0), Err(DesignError::InvalidCosts(_))));
    }

    #[test]
    fn parses_attack_types() {
        assert_eq!("hidden-generalized".parse(), Ok(AttackType::HiddenGeneralized));
        assert_eq!("DG".parse(), Ok(AttackType::DetectableGeneralized));
        assert!("sideways".parse::<AttackType>().is_err());
    }

    #[test]
    fn detectable_jamming_cost_sweeps() {
        // p^C = p_jsc k + p_i floor(1 + (|C| - k)/2), minimized over k by hand
        let sweep = |c: &CostModel<f64>, len: usize| {
            (0..len)
                .map(|k| c.jam_insecure * k as f64 + c.inject * ((2 + len - k) / 2) as f64)
                .fold(f64::INFINITY, f64::min)
        };
        let cheap = cost(1.0, 0.8, 0.25);
        let dear = cost(1.0, 0.8, 0.6);
        assert_eq!(sweep(&cheap, 3), 1.5);
        assert_eq!(Construction::OutvoteSecure.closed_form_cost(0, 3, &cheap), Some(1.5));
        assert_eq!(Construction::OutvoteSecure.counts(0, 3), Some((1, 2, 0)));
        assert_eq!(sweep(&dear, 3), 2.0);
        assert_eq!(Construction::MinCardinalityMajority.closed_form_cost(0, 3, &dear), Some(2.0));
        assert_eq!(Construction::MinCardinalityMajority.counts(0, 3), Some((2, 0, 0)));
        assert_eq!(sweep(&dear, 2), 1.6);
        assert_eq!(Construction::MinCardinalityMajority.closed_form_cost(0, 2, &dear), Some(1.6));
        assert_eq!(Construction::MinCardinalityMajority.counts(0, 2), Some((1, 1, 0)));
    }

    #[test]
    fn closed_forms_match_action_counts() {
        let costs = [cost(1.0, 0.8, 0.6), cost(1.0, 0.8, 0.25), cost(1.0, 0.5, 0.25), cost(1.0, 1.0, 1.0)];
        let constructions = [
            Construction::InjectAll,
            Construction::InjectOneJamInsecure,
            Construction::InjectOneJamRest,
            Construction::InjectMajority,
            Construction::MinCardinalityMajority,
            Construction::OutvoteSecure,
            Construction::JamSecureMajority,
        ];
        for c in &costs {
            for k in &constructions {
                for ns in 0..8 {
                    for nsc in 0..8 {
                        if let Some((i, j, s)) = k.counts(ns, nsc) {
                            assert!(i + j <= nsc && s <= ns, "{k:?} {ns} {nsc}");
                            let closed = k.closed_form_cost(ns, nsc, c).unwrap();
                            assert!((closed - c.action_cost(i, j, s)).abs() < 1e-12, "{k:?} {ns} {nsc}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn secure_jam_count_trend_by_interval() {
        // (p_js + p_jsc - p_i) k + const: nondecreasing when the pair
        // costs at least an injection, nonincreasing otherwise
        let slope = |c: &CostModel<f64>| c.jam_secure + c.jam_insecure - c.inject;
        let at = |c: &CostModel<f64>, ns: usize, nsc: usize, k: usize| {
            c.action_cost(ns - k + 1, nsc + k - ns - 1, k)
        };
        for c in [cost(1.0, 0.8, 0.6), cost(1.0, 0.8, 0.25)] {
            assert!(slope(&c) >= 0.0);
            assert!((0..2).all(|k| at(&c, 5, 3, k + 3) <= at(&c, 5, 3, k + 4) + 1e-12));
        }
        let c = cost(1.0, 0.5, 0.25);
        assert!(slope(&c) < 0.0);
        assert!((0..2).all(|k| at(&c, 5, 3, k + 3) >= at(&c, 5, 3, k + 4)));
    }
}
