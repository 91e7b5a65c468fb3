//! Data-injection and jamming attacks on DC state estimation, built as cuts
//! of the measurement graph and checked against a WLS estimator with
//! bad-data detection and removal.
//!
//! The graph and attack layers are generic over the cost scalar (`f64`,
//! `f32`, or exact rationals); the estimator is generic over any
//! `nalgebra::RealField`. Aliases below fix the common choices.

pub mod attack;
pub mod casefile;
pub mod estimator;
pub mod experiment;
pub mod grid;
pub mod mincut;
pub mod oracle;
pub mod scalar;
pub mod verify;

use num_rational::Rational64;

pub use attack::{
    classify_interval, design_attack, AttackPlan, AttackType, Construction, CostInterval, CostModel, DesignError,
    DesignOptions,
};
pub use casefile::{bundled_case, parse_case, place_measurements, CaseError, CaseFile};
pub use estimator::{detect_and_remove, wls_estimate, DetectorConfig, EstimationReport, EstimatorError, RemovalMode};
pub use grid::{build_graph, build_matrix, GridError, MeasurementGraph, MeasurementId};
pub use mincut::{CutResult, WeightedGraph};
pub use oracle::optimal_cost;
pub use scalar::{Scalar, Weight};
pub use verify::{execute, Verdict};

pub type Cost = CostModel<f64>;
pub type ExactCost = CostModel<Rational64>;
pub type System = grid::MeasurementSystem<f64>;
pub type Plan = AttackPlan<f64>;
pub type ExactPlan = AttackPlan<Rational64>;
pub type Cut = CutResult<f64>;
