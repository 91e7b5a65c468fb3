//! Randomized sweeps over the secure-measurement fraction.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::attack::{design_attack, AttackPlan, AttackType, CostInterval, CostModel, DesignError, DesignOptions};
use crate::casefile::{place_measurements, CaseError, CaseFile};
use crate::estimator::{DetectorConfig, RemovalMode};
use crate::grid::{build_graph, MeasurementSystem};
use crate::verify::{execute_with_noise, VerifyError, DEFAULT_ALPHA, SHIFT_TOL};

/// Exact CSV header of [`write_csv`].
pub const CSV_HEADER: &str = "fraction,trial,type,interval,feasible,cost,verified,greedy_escape";

/// Which instances enter the per-fraction averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Every feasible instance.
    #[default]
    None,
    /// Only instances where hidden injection is feasible.
    HiddenInjection,
    /// Only instances where detectable jamming is feasible.
    DetectableJamming,
}

impl Condition {
    pub fn attack_type(&self) -> Option<AttackType> {
        match self {
            Condition::None => None,
            Condition::HiddenInjection => Some(AttackType::HiddenInjection),
            Condition::DetectableJamming => Some(AttackType::DetectableJamming),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.attack_type().map_or("none", |t| t.as_str()))
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Condition::None),
            "hidden-injection" | "hi" => Ok(Condition::HiddenInjection),
            "detectable-jamming" | "dj" => Ok(Condition::DetectableJamming),
            _ => Err(format!("unknown condition `{s}` (none, hidden-injection, detectable-jamming)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub attack_types: Vec<AttackType>,
    /// At most one triple per cost interval, so the interval column
    /// identifies the triple.
    pub costs: Vec<CostModel<f64>>,
    pub secure_fractions: Vec<f64>,
    pub angle_fraction: f64,
    pub trials: usize,
    pub seed: u64,
    pub condition: Condition,
    /// Run each plan through the estimator.
    pub verify: bool,
    /// Add Gaussian measurement noise and use the chi-square threshold.
    pub noise: bool,
    pub alpha: f64,
    pub design: DesignOptions<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            attack_types: vec![
                AttackType::HiddenInjection,
                AttackType::DetectableInjection,
                AttackType::HiddenGeneralized,
            ],
            costs: vec![CostModel { inject: 1.0, jam_secure: 0.5, jam_insecure: 0.25 }],
            secure_fractions: fraction_grid(0.0, 0.5, 0.05),
            angle_fraction: 0.6,
            trials: 100,
            seed: 0,
            condition: Condition::None,
            verify: true,
            noise: false,
            alpha: DEFAULT_ALPHA,
            design: DesignOptions::default(),
        }
    }
}

/// `start, start + step, ..` up to `end` inclusive, rounded to 1e-9.
pub fn fraction_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub trial: usize,
    #[serde(rename = "type")]
    pub attack_type: AttackType,
    pub interval: CostInterval,
    pub feasible: bool,
    pub cost: Option<f64>,
    pub verified: bool,
    pub greedy_escape: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub fraction: f64,
    #[serde(rename = "type")]
    pub attack_type: AttackType,
    pub interval: CostInterval,
    pub instances: usize,
    pub mean_cost: Option<f64>,
}

/// Outcome of verifying one plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Check {
    pub verified: bool,
    pub greedy_escape: bool,
}

impl SweepConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.attack_types.is_empty() || self.costs.is_empty() || self.secure_fractions.is_empty() {
            return bad("attack types, cost triples and fractions must be nonempty");
        }
        let mut seen = Vec::new();
        for c in &self.costs {
            let interval = c.validate().map(|_| c.interval())?;
            if seen.contains(&interval) {
                return bad("two cost triples fall in the same interval");
            }
            seen.push(interval);
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        Ok(())
    }

    /// Requested types plus the conditioning type, without duplicates.
    pub fn effective_types(&self) -> Vec<AttackType> {
        let mut types = self.attack_types.clone();
        if let Some(t) = self.condition.attack_type() {
            if !types.contains(&t) {
                types.push(t);
            }
        }
        types
    }
}

/// Verifies a plan: greedy removal first, and for detectable plans that
/// fail under it, exhaustive removal bounded by the plan's residue.
pub fn check_plan(
    sys: &MeasurementSystem<f64>,
    truth: &DVector<f64>,
    noise: Option<&DVector<f64>>,
    plan: &AttackPlan<f64>,
    alpha: f64,
) -> Result<Check, VerifyError> {
    let dof = sys.len() - sys.bus_count();
    let (greedy, shift_tol) = match noise {
        None => (DetectorConfig::noiseless(RemovalMode::GreedyNormalizedResidual), SHIFT_TOL),
        Some(_) => (DetectorConfig::chi_square(dof, RemovalMode::GreedyNormalizedResidual), alpha / 2.0),
    };
    let first = execute_with_noise(sys, truth, noise, plan, &greedy, alpha, shift_tol)?;
    if first.matches_declared_type || plan.attack_type.is_hidden() {
        return Ok(Check { verified: first.matches_declared_type, greedy_escape: false });
    }
    let bounded = DetectorConfig {
        removal_mode: RemovalMode::ExhaustiveMinimal,
        max_removals: Some(plan.untouched().len().max(1)),
        ..greedy
    };
    let second = execute_with_noise(sys, truth, noise, plan, &bounded, alpha, shift_tol)?;
    Ok(Check { verified: second.matches_declared_type, greedy_escape: second.matches_declared_type })
}

fn run_instance(
    case: &CaseFile,
    cfg: &SweepConfig,
    types: &[AttackType],
    fraction_index: usize,
    trial: usize,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let fraction = cfg.secure_fractions[fraction_index];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((fraction_index as u64) << 32) | trial as u64);
    let sys = place_measurements(case, cfg.angle_fraction, fraction, rng.random())?;
    let graph = build_graph(&sys).map_err(CaseError::from)?;
    let n = sys.bus_count();
    let truth = DVector::from_fn(n + 1, |i, _| if i == n { 0.0 } else { rng.random_range(-0.1..0.1) });
    let noise = cfg.noise.then(|| {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        DVector::from_iterator(sys.len(), sys.noise_sigma().iter().map(|s| s * normal.sample(&mut rng)))
    });

    let mut rows = Vec::with_capacity(cfg.costs.len() * types.len());
    for cost in &cfg.costs {
        let interval = cost.interval();
        for &t in types {
            let plan = match design_attack(t, &graph, cost, &cfg.design) {
                Ok(p) => Some(p),
                Err(DesignError::Infeasible | DesignError::NoSolutionFound) => None,
                Err(e) => return Err(e.into()),
            };
            let check = match (&plan, cfg.verify) {
                (Some(p), true) => check_plan(&sys, &truth, noise.as_ref(), p, cfg.alpha)?,
                _ => Check { verified: false, greedy_escape: false },
            };
            rows.push(SweepRow {
                fraction,
                trial,
                attack_type: t,
                interval,
                feasible: plan.is_some(),
                cost: plan.map(|p| p.total_cost),
                verified: check.verified,
                greedy_escape: check.greedy_escape,
            });
        }
    }
    Ok(rows)
}

/// Runs every (fraction, trial) instance in parallel. Rows come back
/// ordered by fraction, trial, cost triple, then attack type.
pub fn run_sweep(case: &CaseFile, cfg: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    cfg.validate()?;
    let types = cfg.effective_types();
    let jobs: Vec<(usize, usize)> =
        (0..cfg.secure_fractions.len()).flat_map(|f| (0..cfg.trials).map(move |t| (f, t))).collect();
    let chunks = jobs
        .par_iter()
        .map(|&(f, t)| run_instance(case, cfg, &types, f, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Mean feasible cost per (fraction, type, interval). Under a condition,
/// only (fraction, trial, interval) instances where the conditioning type
/// is feasible count.
pub fn summarize(rows: &[SweepRow], condition: Condition) -> Vec<SummaryRow> {
    let fraction_key = |f: f64| (f * 1e9).round() as i64;
    let allowed: BTreeMap<(i64, usize, CostInterval), bool> = match condition.attack_type() {
        None => BTreeMap::new(),
        Some(t) => rows
            .iter()
            .filter(|r| r.attack_type == t)
            .map(|r| ((fraction_key(r.fraction), r.trial, r.interval), r.feasible))
            .collect(),
    };
    let mut order: Vec<(i64, AttackType, CostInterval)> = Vec::new();
    let mut groups: BTreeMap<(i64, AttackType, CostInterval), (f64, usize, f64)> = BTreeMap::new();
    for r in rows {
        let key = (fraction_key(r.fraction), r.attack_type, r.interval);
        let entry = groups.entry(key).or_insert_with(|| {
            order.push(key);
            (r.fraction, 0, 0.0)
        });
        let admitted = condition == Condition::None
            || allowed.get(&(key.0, r.trial, r.interval)).copied().unwrap_or(false);
        if let (true, Some(c)) = (admitted, r.cost) {
            entry.1 += 1;
            entry.2 += c;
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (fraction, instances, sum) = groups[&key];
            SummaryRow {
                fraction,
                attack_type: key.1,
                interval: key.2,
                instances,
                mean_cost: (instances > 0).then(|| sum / instances as f64),
            }
        })
        .collect()
}

/// Writes rows as CSV with [`CSV_HEADER`].
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes summary rows as CSV (`fraction,type,interval,instances,mean_cost`).
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
