//! DC weighted-least-squares state estimation with a residual threshold
//! test and bad-data removal.
//!
//! States are vectors of length `n + 1` with the reference angle last and
//! pinned to zero. Residual norms are `||Σ^{-1/2}(z - Hx)||₂`.

use std::collections::BTreeSet;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, RealField};
use serde::Serialize;
use thiserror::Error;

use crate::grid::{incidence_matrix, is_connected, MeasurementId, MeasurementSystem};

/// Threshold used for noiseless verification runs.
pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// Standard normal 97.5% quantile.
const Z_975: f64 = 1.959_963_984_540_054;

/// Leverage above `1 - CRITICAL_TOL` marks a critical measurement.
const CRITICAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalMode {
    /// Repeatedly drop the non-critical measurement with the largest
    /// normalized residual and re-estimate.
    GreedyNormalizedResidual,
    /// Try removal sets in increasing size; the first passing set that keeps
    /// the system observable wins.
    ExhaustiveMinimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectorConfig<T> {
    /// Threshold on the weighted residual norm.
    pub lambda: T,
    pub removal_mode: RemovalMode,
    /// Cap on removed measurements; `None` means `m - n`, the most that can
    /// leave a spanning tree. Values above `m - n` are clamped.
    pub max_removals: Option<usize>,
}

impl<T: RealField + Copy> DetectorConfig<T> {
    /// Threshold [`DEFAULT_LAMBDA`] for noiseless data.
    pub fn noiseless(removal_mode: RemovalMode) -> Self {
        DetectorConfig { lambda: nalgebra::convert(DEFAULT_LAMBDA), removal_mode, max_removals: None }
    }

    /// Threshold at the 97.5% point of the residual norm under Gaussian
    /// noise with `dof = m - n` degrees of freedom.
    pub fn chi_square(dof: usize, removal_mode: RemovalMode) -> Self {
        let lambda = chi_square_975(dof).sqrt().max(DEFAULT_LAMBDA);
        DetectorConfig { lambda: nalgebra::convert(lambda), removal_mode, max_removals: None }
    }

    fn budget(&self, m: usize, n: usize) -> usize {
        let reserve = m.saturating_sub(n);
        self.max_removals.map_or(reserve, |k| k.min(reserve))
    }
}

/// 97.5% quantile of the chi-square distribution (Wilson–Hilferty).
pub fn chi_square_975(dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    let k = dof as f64;
    let s = 2.0 / (9.0 * k);
    k * (1.0 - s + Z_975 * s.sqrt()).powi(3)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("measurement vector has {got} entries, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("measurement system is unobservable")]
    Unobservable,
    #[error("bad-data removal failed after removing {} measurements", removed.len())]
    RemovalFailed { removed: BTreeSet<MeasurementId> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationReport<T> {
    /// Initial estimate over all measurements.
    pub estimate: Vec<T>,
    pub residual_norm: T,
    pub detected: bool,
    pub removed: BTreeSet<MeasurementId>,
    /// Estimate after removal; equals `estimate` when nothing was detected.
    pub final_estimate: Vec<T>,
    pub final_residual_norm: T,
    pub observable_after_removal: bool,
}

/// Weighted problem `Σ^{-1/2} H_r x ≈ Σ^{-1/2} z` on the free columns.
struct Weighted<T: RealField> {
    a: DMatrix<T>,
    b: DVector<T>,
    ids: Vec<MeasurementId>,
    ends: Vec<(usize, usize)>,
    n: usize,
}

impl<T: RealField + Copy> Weighted<T> {
    fn new(sys: &MeasurementSystem<T>, z: &DVector<T>) -> Result<Self, EstimatorError> {
        let m = sys.len();
        if z.len() != m {
            return Err(EstimatorError::LengthMismatch { expected: m, got: z.len() });
        }
        let n = sys.bus_count();
        let h = incidence_matrix(sys);
        let mut a = h.columns(0, n).into_owned();
        let mut b = z.clone();
        for (row, s) in sys.noise_sigma().iter().enumerate() {
            a.row_mut(row).unscale_mut(*s);
            b[row] /= *s;
        }
        let ids = sys.measurements().iter().map(|m| m.id).collect();
        let ends = sys.measurements().iter().map(|m| sys.endpoints(m)).collect();
        Ok(Weighted { a, b, ids, ends, n })
    }

    fn all_rows(&self) -> Vec<usize> {
        (0..self.ids.len()).collect()
    }

    fn connected(&self, rows: &[usize]) -> bool {
        let ends: Vec<_> = rows.iter().map(|&r| self.ends[r]).collect();
        is_connected(self.n + 1, &ends)
    }

    /// Least-squares solution on `rows` (length `n`), via QR.
    fn solve(&self, rows: &[usize]) -> Result<DVector<T>, EstimatorError> {
        if !self.connected(rows) {
            return Err(EstimatorError::Unobservable);
        }
        let a = self.a.select_rows(rows);
        let b = self.b.select_rows(rows);
        let qr = a.qr();
        let qtb = qr.q().transpose() * b;
        qr.r().solve_upper_triangular(&qtb).ok_or(EstimatorError::Unobservable)
    }

    fn residual(&self, rows: &[usize], x: &DVector<T>) -> DVector<T> {
        self.b.select_rows(rows) - self.a.select_rows(rows) * x
    }

    /// Normalized residuals `r_i / sqrt(Ω_ii)` on `rows`; `None` marks
    /// critical measurements.
    fn normalized(&self, rows: &[usize], x: &DVector<T>) -> Vec<Option<T>> {
        let a = self.a.select_rows(rows);
        let r = self.residual(rows, x);
        let Some(chol) = (a.transpose() * &a).cholesky() else {
            return vec![None; rows.len()];
        };
        let g_inv_at = chol.solve(&a.transpose());
        let tol: T = nalgebra::convert(CRITICAL_TOL);
        (0..rows.len())
            .map(|i| {
                let omega = T::one() - a.row(i).dot(&g_inv_at.column(i).transpose());
                (omega > tol).then(|| r[i] / omega.sqrt())
            })
            .collect()
    }
}

fn pad<T: RealField + Copy>(x: &DVector<T>) -> Vec<T> {
    x.iter().copied().chain(std::iter::once(T::zero())).collect()
}

/// Weighted least-squares estimate with the reference angle pinned to 0.
pub fn wls_estimate<T: RealField + Copy>(
    sys: &MeasurementSystem<T>,
    z: &DVector<T>,
) -> Result<DVector<T>, EstimatorError> {
    let w = Weighted::new(sys, z)?;
    let x = w.solve(&w.all_rows())?;
    Ok(DVector::from_vec(pad(&x)))
}

/// `||Σ^{-1/2}(z - Hx)||₂` for a full state `x` (length `n + 1`).
pub fn residual_norm<T: RealField + Copy>(
    sys: &MeasurementSystem<T>,
    z: &DVector<T>,
    x: &DVector<T>,
) -> Result<T, EstimatorError> {
    let w = Weighted::new(sys, z)?;
    let rows = w.all_rows();
    Ok(w.residual(&rows, &x.rows(0, w.n).into_owned()).norm())
}

/// Normalized residual of every measurement at the WLS estimate; critical
/// measurements (zero residual variance) report `None`.
pub fn normalized_residuals<T: RealField + Copy>(
    sys: &MeasurementSystem<T>,
    z: &DVector<T>,
) -> Result<Vec<Option<T>>, EstimatorError> {
    let w = Weighted::new(sys, z)?;
    let rows = w.all_rows();
    let x = w.solve(&rows)?;
    Ok(w.normalized(&rows, &x))
}

/// Estimates, runs the threshold test and, if it fails, removes bad data
/// according to `cfg`.
pub fn detect_and_remove<T: RealField + Copy>(
    sys: &MeasurementSystem<T>,
    z: &DVector<T>,
    cfg: &DetectorConfig<T>,
) -> Result<EstimationReport<T>, EstimatorError> {
    let w = Weighted::new(sys, z)?;
    let rows = w.all_rows();
    let x = w.solve(&rows)?;
    let residual_norm = w.residual(&rows, &x).norm();
    let estimate = pad(&x);
    let mut report = EstimationReport {
        estimate: estimate.clone(),
        residual_norm,
        detected: residual_norm > cfg.lambda,
        removed: BTreeSet::new(),
        final_estimate: estimate,
        final_residual_norm: residual_norm,
        observable_after_removal: true,
    };
    if !report.detected {
        return Ok(report);
    }
    let budget = cfg.budget(rows.len(), w.n);
    let (kept, x) = match cfg.removal_mode {
        RemovalMode::GreedyNormalizedResidual => greedy(&w, cfg.lambda, budget)?,
        RemovalMode::ExhaustiveMinimal => exhaustive(&w, cfg.lambda, budget)?,
    };
    report.removed = rows.iter().filter(|r| !kept.contains(r)).map(|&r| w.ids[r]).collect();
    report.final_residual_norm = w.residual(&kept, &x).norm();
    report.final_estimate = pad(&x);
    report.observable_after_removal = w.connected(&kept);
    Ok(report)
}

type Removal<T> = (Vec<usize>, DVector<T>);

fn ids_outside<T: RealField + Copy>(w: &Weighted<T>, kept: &[usize]) -> BTreeSet<MeasurementId> {
    (0..w.ids.len()).filter(|r| !kept.contains(r)).map(|r| w.ids[r]).collect()
}

fn greedy<T: RealField + Copy>(w: &Weighted<T>, lambda: T, budget: usize) -> Result<Removal<T>, EstimatorError> {
    let mut kept = w.all_rows();
    let mut x = w.solve(&kept)?;
    for _ in 0..budget {
        let scores = w.normalized(&kept, &x);
        let mut pick: Option<(usize, T)> = None;
        for (i, score) in scores.iter().enumerate() {
            let Some(s) = score.map(|s| s.abs()) else { continue };
            if pick.is_some_and(|(_, best)| s <= best) {
                continue;
            }
            let rest: Vec<usize> = kept.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &r)| r).collect();
            if w.connected(&rest) {
                pick = Some((i, s));
            }
        }
        let Some((i, _)) = pick else { break };
        kept.remove(i);
        x = w.solve(&kept)?;
        if w.residual(&kept, &x).norm() <= lambda {
            return Ok((kept, x));
        }
    }
    Err(EstimatorError::RemovalFailed { removed: ids_outside(w, &kept) })
}

fn exhaustive<T: RealField + Copy>(
    w: &Weighted<T>,
    lambda: T,
    budget: usize,
) -> Result<Removal<T>, EstimatorError> {
    let m = w.ids.len();
    for k in 1..=budget {
        for drop in (0..m).combinations(k) {
            let kept: Vec<usize> = (0..m).filter(|r| !drop.contains(r)).collect();
            if !w.connected(&kept) {
                continue;
            }
            let x = w.solve(&kept)?;
            if w.residual(&kept, &x).norm() <= lambda {
                return Ok((kept, x));
            }
        }
    }
    Err(EstimatorError::RemovalFailed { removed: BTreeSet::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_matrix, Line, Measurement};

    /// 3 buses + ref, flows on a triangle, angles on every bus.
    fn triangle() -> MeasurementSystem<f64> {
        let lines = vec![
            Line { from: 0, to: 1, susceptance: 2.0 },
            Line { from: 1, to: 2, susceptance: 4.0 },
            Line { from: 0, to: 2, susceptance: 5.0 },
        ];
        let ms = vec![
            Measurement::flow(0, 0, 1, 2.0, false),
            Measurement::flow(1, 1, 2, 4.0, false),
            Measurement::flow(2, 0, 2, 5.0, false),
            Measurement::angle(3, 0, false),
            Measurement::angle(4, 2, false),
            Measurement::angle(5, 1, false),
        ];
        MeasurementSystem::new(3, lines, ms).unwrap()
    }

    fn state() -> DVector<f64> {
        DVector::from_vec(vec![0.1, -0.05, 0.2, 0.0])
    }

    #[test]
    fn noiseless_recovery() {
        let sys = triangle();
        let h = build_matrix(&sys).unwrap();
        let z = &h * state();
        let x = wls_estimate(&sys, &z).unwrap();
        assert!((x - state()).amax() < 1e-12);
    }

    #[test]
    fn column_space_shift_moves_estimate() {
        let sys = triangle();
        let h = build_matrix(&sys).unwrap();
        let c = DVector::from_vec(vec![0.0, 1.0, 1.0, 0.0]);
        let z = &h * state() + &h * &c;
        let x = wls_estimate(&sys, &z).unwrap();
        assert!((x - state() - c).amax() < 1e-12);
        assert!(residual_norm(&sys, &z, &wls_estimate(&sys, &z).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let sys = triangle();
        let h = build_matrix(&sys).unwrap();
        let z = DVector::from_vec(vec![0.3, -0.2, 0.7, 0.15, 0.1, -0.4]);
        let x = wls_estimate(&sys, &z).unwrap();
        let r = &z - &h * &x;
        // equal sigmas, so orthogonality holds in the plain inner product
        let g = h.columns(0, 3).transpose() * r;
        assert!(g.amax() < 1e-10);
    }

    #[test]
    fn clean_data_not_detected() {
        let sys = triangle();
        let z = build_matrix(&sys).unwrap() * state();
        let cfg = DetectorConfig::noiseless(RemovalMode::ExhaustiveMinimal);
        let report = detect_and_remove(&sys, &z, &cfg).unwrap();
        assert!(!report.detected);
        assert!(report.removed.is_empty());
        assert_eq!(report.final_estimate, report.estimate);
    }

    #[test]
    fn single_bad_measurement_removed_by_both_modes() {
        let sys = triangle();
        let mut z = build_matrix(&sys).unwrap() * state();
        z[1] += 5.0;
        for mode in [RemovalMode::ExhaustiveMinimal, RemovalMode::GreedyNormalizedResidual] {
            let report = detect_and_remove(&sys, &z, &DetectorConfig::noiseless(mode)).unwrap();
            assert!(report.detected);
            assert_eq!(report.removed, BTreeSet::from([MeasurementId(1)]), "{mode:?}");
            assert!(report.final_residual_norm < 1e-9);
            let x = DVector::from_vec(report.final_estimate);
            assert!((x - state()).amax() < 1e-12);
        }
    }

    #[test]
    fn critical_measurements_have_no_normalized_residual() {
        // bus 1 only reached through flow 0
        let lines = vec![Line { from: 0, to: 1, susceptance: 1.0 }];
        let ms = vec![
            Measurement::flow(0, 0, 1, 1.0, false),
            Measurement::angle(1, 0, false),
            Measurement::angle(2, 0, false),
        ];
        let sys = MeasurementSystem::new(2, lines, ms).unwrap();
        let z = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let nr = normalized_residuals(&sys, &z).unwrap();
        assert!(nr[0].is_none());
        assert!(nr[1].is_some() && nr[2].is_some());
    }

    #[test]
    fn removal_fails_when_budget_exhausted() {
        let sys = triangle();
        let mut z = build_matrix(&sys).unwrap() * state();
        z[0] += 1.0;
        z[1] += 2.0;
        let cfg = DetectorConfig { max_removals: Some(1), ..DetectorConfig::noiseless(RemovalMode::ExhaustiveMinimal) };
        assert!(matches!(detect_and_remove(&sys, &z, &cfg), Err(EstimatorError::RemovalFailed { .. })));
    }

    #[test]
    fn unobservable_and_length_errors() {
        let sys = triangle().without(&BTreeSet::from([MeasurementId(3), MeasurementId(4), MeasurementId(5)]));
        let z = DVector::zeros(3);
        assert_eq!(wls_estimate(&sys, &z), Err(EstimatorError::Unobservable));
        assert!(matches!(
            wls_estimate(&triangle(), &z),
            Err(EstimatorError::LengthMismatch { expected: 6, got: 3 })
        ));
    }

    #[test]
    fn chi_square_approximation() {
        // table values 5.024, 20.483, 83.298
        assert!((chi_square_975(1) - 5.024).abs() < 0.1);
        assert!((chi_square_975(10) - 20.483).abs() < 0.05);
        assert!((chi_square_975(60) - 83.298).abs() < 0.05);
    }
}
