//! End-to-end execution of an attack plan against the estimator.

use std::collections::BTreeSet;

use nalgebra::{DVector, RealField};
use serde::Serialize;
use thiserror::Error;

use crate::attack::AttackPlan;
use crate::estimator::{detect_and_remove, wls_estimate, DetectorConfig, EstimationReport, EstimatorError};
use crate::grid::{incidence_matrix, MeasurementId, MeasurementSystem, DEFAULT_NOISE_SIGMA};
use crate::scalar::Scalar;

/// Default injection magnitude, ten noise standard deviations.
pub const DEFAULT_ALPHA: f64 = 10.0 * DEFAULT_NOISE_SIGMA;

/// Per-entry tolerance for "the estimate moved".
pub const SHIFT_TOL: f64 = 1e-6;

/// Tolerance for the hidden-attack identities (residual and shift).
pub const HIDDEN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("plan does not fit the measurement system: {0}")]
    PlanMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict<T> {
    /// Final estimate differs from the reference estimate on some bus.
    pub estimate_changed: bool,
    /// The initial threshold test did not fire.
    pub stealthy: bool,
    /// Some injected measurement was kept by bad-data removal.
    pub survived_injection: bool,
    /// The system stayed observable after jamming and removal.
    pub observability_ok: bool,
    /// The final estimate passes the threshold test.
    pub final_test_passed: bool,
    /// Residual norm equals that of the attack-free data on the same rows.
    pub residual_unchanged: bool,
    /// Final estimate minus reference equals `alpha * c`.
    pub shift_matches: bool,
    pub matches_declared_type: bool,
    /// `None` when the estimator could not run or removal failed.
    pub report: Option<EstimationReport<T>>,
}

/// Applies `plan` to noiseless data `z = H·truth` and runs the detector.
///
/// Injected rows get `(H·alpha·c)` added, jammed rows are deleted, then
/// [`detect_and_remove`] runs on what is left.
pub fn execute<T: RealField + Copy, C: Scalar>(
    sys: &MeasurementSystem<T>,
    truth: &DVector<T>,
    plan: &AttackPlan<C>,
    cfg: &DetectorConfig<T>,
    alpha: T,
) -> Result<Verdict<T>, VerifyError> {
    execute_with_noise(sys, truth, None, plan, cfg, alpha, nalgebra::convert(SHIFT_TOL))
}

/// As [`execute`], with optional additive measurement noise. The
/// reference estimate is the attack-free estimate on the noisy data, and
/// `shift_tol` decides when the estimate counts as moved.
pub fn execute_with_noise<T: RealField + Copy, C: Scalar>(
    sys: &MeasurementSystem<T>,
    truth: &DVector<T>,
    noise: Option<&DVector<T>>,
    plan: &AttackPlan<C>,
    cfg: &DetectorConfig<T>,
    alpha: T,
    shift_tol: T,
) -> Result<Verdict<T>, VerifyError> {
    let n = sys.bus_count();
    let m = sys.len();
    if truth.len() != n + 1 {
        return Err(VerifyError::PlanMismatch(format!("state has {} entries, expected {}", truth.len(), n + 1)));
    }
    if plan.state_shift.len() != n + 1 {
        return Err(VerifyError::PlanMismatch(format!(
            "state shift has {} entries, expected {}",
            plan.state_shift.len(),
            n + 1
        )));
    }
    if noise.is_some_and(|e| e.len() != m) {
        return Err(VerifyError::PlanMismatch("noise vector length differs from measurement count".into()));
    }
    let rows = sys.row_index();
    let jammed = plan.jammed();
    for id in plan.injected.iter().chain(&jammed) {
        if !rows.contains_key(id) {
            return Err(VerifyError::PlanMismatch(format!("unknown measurement {id}")));
        }
    }

    let h = incidence_matrix(sys);
    let c = DVector::from_iterator(n + 1, plan.state_shift.iter().map(|&b| if b { alpha } else { T::zero() }));
    let hc = &h * &c;
    let mut clean = &h * truth;
    if let Some(e) = noise {
        clean += e;
    }
    let mut attacked = clean.clone();
    for id in &plan.injected {
        let r = rows[id];
        attacked[r] += hc[r];
    }
    let reference = match noise {
        None => truth.clone(),
        Some(_) => wls_estimate(sys, &clean).map_err(|e| VerifyError::PlanMismatch(e.to_string()))?,
    };

    let kept: Vec<usize> = sys.measurements().iter().filter(|m| !jammed.contains(&m.id)).map(|m| rows[&m.id]).collect();
    let sub = sys.without(&jammed);
    let z_sub = attacked.select_rows(&kept);
    let clean_sub = clean.select_rows(&kept);

    let mut verdict = Verdict {
        estimate_changed: false,
        stealthy: false,
        survived_injection: false,
        observability_ok: false,
        final_test_passed: false,
        residual_unchanged: false,
        shift_matches: false,
        matches_declared_type: false,
        report: None,
    };
    let report = match detect_and_remove(&sub, &z_sub, cfg) {
        Ok(r) => r,
        Err(EstimatorError::RemovalFailed { .. }) => {
            verdict.observability_ok = true;
            return Ok(verdict);
        }
        Err(_) => return Ok(verdict),
    };
    let clean_residual = wls_estimate(&sub, &clean_sub)
        .and_then(|x| crate::estimator::residual_norm(&sub, &clean_sub, &x))
        .map_err(|e| VerifyError::PlanMismatch(e.to_string()))?;

    let tol: T = nalgebra::convert(HIDDEN_TOL);
    let final_x = DVector::from_column_slice(&report.final_estimate);
    let delta = &final_x - &reference;
    verdict.estimate_changed = delta.rows(0, n).iter().any(|d| d.abs() > shift_tol);
    verdict.stealthy = !report.detected;
    verdict.survived_injection = plan.injected.iter().any(|id| !report.removed.contains(id));
    verdict.observability_ok = report.observable_after_removal;
    verdict.final_test_passed = report.final_residual_norm <= cfg.lambda;
    verdict.residual_unchanged =
        (report.residual_norm - clean_residual).abs() <= tol * clean_residual.max(T::one());
    verdict.shift_matches = (delta - &c).amax() <= tol;

    let residue: BTreeSet<MeasurementId> = plan.untouched();
    verdict.matches_declared_type = if plan.attack_type.is_hidden() {
        verdict.stealthy && verdict.estimate_changed && verdict.residual_unchanged
    } else {
        verdict.estimate_changed
            && verdict.survived_injection
            && verdict.observability_ok
            && verdict.final_test_passed
            && (residue.is_empty() || report.detected)
    };
    verdict.report = Some(report);
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{
        detectable_generalized, hidden_generalized, AttackType, Construction, CostModel, DesignOptions,
    };
    use crate::estimator::RemovalMode;
    use crate::grid::{build_graph, Line, Measurement};
    use crate::mincut::CutResult;
    use crate::scalar::Weight as W;

    /// buses 1,2 + ref: e1 = flow(1,2) insecure, e2 = angle(1) secure,
    /// e3 = angle(2) insecure
    fn e1() -> MeasurementSystem<f64> {
        MeasurementSystem::new(
            2,
            vec![Line { from: 0, to: 1, susceptance: 1.0 }],
            vec![Measurement::flow(1, 0, 1, 1.0, false), Measurement::angle(2, 0, true), Measurement::angle(3, 1, false)],
        )
        .unwrap()
    }

    fn truth() -> DVector<f64> {
        DVector::from_vec(vec![0.05, -0.03, 0.0])
    }

    fn exhaustive() -> DetectorConfig<f64> {
        DetectorConfig::noiseless(RemovalMode::ExhaustiveMinimal)
    }

    #[test]
    fn empty_plan_is_a_no_op() {
        let sys = e1();
        let plan: AttackPlan<f64> = AttackPlan {
            attack_type: AttackType::HiddenInjection,
            construction: Construction::InjectAll,
            cut: CutResult {
                side_a: BTreeSet::new(),
                edges: BTreeSet::new(),
                weight: W::zero(),
                n_secure: 0,
                n_insecure: 0,
            },
            injected: BTreeSet::new(),
            jammed_insecure: BTreeSet::new(),
            jammed_secure: BTreeSet::new(),
            state_shift: vec![false; 3],
            total_cost: 0.0,
        };
        let v = execute(&sys, &truth(), &plan, &exhaustive(), 1.0).unwrap();
        assert!(!v.estimate_changed);
        assert!(v.stealthy);
        assert!(!v.matches_declared_type);
    }

    #[test]
    fn hidden_generalized_on_e1_shifts_node_two() {
        let sys = e1();
        let g = build_graph(&sys).unwrap();
        let plan = hidden_generalized(&g, &CostModel::new(1.0, 0.5, 0.25).unwrap()).unwrap();
        let v = execute(&sys, &truth(), &plan, &exhaustive(), 1.0).unwrap();
        assert!(v.stealthy && v.estimate_changed && v.residual_unchanged && v.shift_matches);
        assert!(v.matches_declared_type);
        let x = v.report.unwrap().final_estimate;
        assert!((x[1] - truth()[1] - 1.0).abs() < 1e-12);
        assert!((x[0] - truth()[0]).abs() < 1e-12);
    }

    #[test]
    fn detectable_interval_one_on_e1() {
        let sys = e1();
        let g = build_graph(&sys).unwrap();
        let plan = detectable_generalized(&g, &CostModel::new(1.0, 0.8, 0.6).unwrap(), &DesignOptions::default())
            .unwrap();
        let v = execute(&sys, &truth(), &plan, &exhaustive(), 1.0).unwrap();
        assert!(v.matches_declared_type, "{v:?}");
        assert!(v.survived_injection);
    }

    #[test]
    fn detectable_plan_with_residue_is_detected_then_cleaned() {
        // 1 bus + ref with three parallel angle measurements: inject two,
        // leave one as residue.
        let sys = MeasurementSystem::new(
            1,
            vec![],
            vec![Measurement::angle(0, 0, false), Measurement::angle(1, 0, false), Measurement::angle(2, 0, false)],
        )
        .unwrap();
        let g = build_graph(&sys).unwrap();
        let cost = CostModel::new(1.0, 1.0, 1.0).unwrap();
        let plan = crate::attack::detectable_injection(&g, &cost, &DesignOptions::default()).unwrap();
        assert_eq!(plan.untouched().len(), 1);
        for mode in [RemovalMode::ExhaustiveMinimal, RemovalMode::GreedyNormalizedResidual] {
            let v = execute(&sys, &DVector::from_vec(vec![0.1, 0.0]), &plan, &DetectorConfig::noiseless(mode), 0.1)
                .unwrap();
            let report = v.report.as_ref().unwrap();
            assert!(report.detected);
            assert_eq!(report.removed, plan.untouched());
            assert!(v.matches_declared_type);
        }
    }

    #[test]
    fn unknown_ids_rejected() {
        let sys = e1();
        let g = build_graph(&sys).unwrap();
        let mut plan = hidden_generalized(&g, &CostModel::new(1.0, 0.5, 0.25).unwrap()).unwrap();
        plan.injected.insert(MeasurementId(99));
        assert!(matches!(execute(&sys, &truth(), &plan, &exhaustive(), 1.0), Err(VerifyError::PlanMismatch(_))));
    }
}
