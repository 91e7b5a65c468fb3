//! Case files: grid topology in TOML, bundled IEEE cases, and randomized
//! measurement placement.
//!
//! ```toml
//! name = "two-bus"
//!
//! [buses]
//! count = 2
//!
//! [lines]
//! # from, to, susceptance (optional, default 1.0)
//! list = [[1, 2, 10.0]]
//!
//! [measurements]   # optional; ids are 1.. in order, flows first
//! flows = [[1, 2]]
//! angles = [1]
//!
//! [secure]         # optional
//! ids = [2]
//! ```
//!
//! Bus numbers in files are 1-based; internally buses are `0..n`.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::grid::{build_graph, GridError, Line, Measurement, MeasurementId, MeasurementKind, MeasurementSystem};

/// Bundled topologies by name.
pub const BUNDLED: [(&str, &str); 2] = [
    ("ieee14", include_str!("../data/ieee14.toml")),
    ("ieee57", include_str!("../data/ieee57.toml")),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("fraction {0} is outside [0, 1]")]
    BadFraction(f64),
    #[error("unknown bundled case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseFile {
    pub name: String,
    pub bus_count: usize,
    /// Lines with 0-based endpoints.
    pub lines: Vec<Line<f64>>,
    /// Fixed measurement list (0-based buses); ids are `1..=len`.
    pub measurements: Option<Vec<MeasurementKind>>,
    pub secure: Option<BTreeSet<MeasurementId>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    name: Option<String>,
    buses: RawBuses,
    lines: RawLines,
    measurements: Option<RawMeasurements>,
    secure: Option<RawSecure>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuses {
    count: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLines {
    list: Vec<RawLine>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLine {
    Weighted(i64, i64, f64),
    Plain(i64, i64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasurements {
    #[serde(default)]
    flows: Vec<(i64, i64)>,
    #[serde(default)]
    angles: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSecure {
    ids: Vec<usize>,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a case document.
pub fn parse_case(text: &str) -> Result<CaseFile, CaseError> {
    let raw: RawCase = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| position(text, s.start));
        CaseError::Parse { line, column, message: e.message().to_string() }
    })?;
    let n = raw.buses.count;
    if n == 0 {
        return Err(CaseError::Topology("bus count must be positive".into()));
    }
    let bus = |b: i64, what: &str| -> Result<usize, CaseError> {
        if b < 1 || b as usize > n {
            return Err(CaseError::Topology(format!("{what} references bus {b}, valid range is 1..={n}")));
        }
        Ok(b as usize - 1)
    };

    let mut lines = Vec::with_capacity(raw.lines.list.len());
    for (k, l) in raw.lines.list.iter().enumerate() {
        let (from, to, susceptance) = match *l {
            RawLine::Weighted(a, b, s) => (a, b, s),
            RawLine::Plain(a, b) => (a, b, 1.0),
        };
        let what = format!("line {}", k + 1);
        let (from, to) = (bus(from, &what)?, bus(to, &what)?);
        if from == to {
            return Err(CaseError::Topology(format!("{what} is a self-loop on bus {}", from + 1)));
        }
        if !(susceptance > 0.0 && susceptance.is_finite()) {
            return Err(CaseError::Topology(format!("{what} has non-positive susceptance {susceptance}")));
        }
        lines.push(Line { from, to, susceptance });
    }

    let measurements = match raw.measurements {
        None => None,
        Some(m) => {
            let mut kinds = Vec::with_capacity(m.flows.len() + m.angles.len());
            for (k, &(a, b)) in m.flows.iter().enumerate() {
                let what = format!("flow measurement {}", k + 1);
                let (from, to) = (bus(a, &what)?, bus(b, &what)?);
                let joined = lines.iter().any(|l| (l.from, l.to) == (from, to) || (l.from, l.to) == (to, from));
                if !joined {
                    return Err(CaseError::Topology(format!("{what} on {a}-{b} has no matching line")));
                }
                kinds.push(MeasurementKind::LineFlow { from, to });
            }
            for (k, &b) in m.angles.iter().enumerate() {
                let bus = bus(b, &format!("angle measurement {}", k + 1))?;
                kinds.push(MeasurementKind::PhaseAngle { bus });
            }
            if kinds.len() < n {
                return Err(CaseError::Topology(format!(
                    "{} measurements cannot observe {n} buses",
                    kinds.len()
                )));
            }
            Some(kinds)
        }
    };

    let secure = match raw.secure {
        None => None,
        Some(s) => {
            let m = measurements.as_ref().map_or(lines.len(), Vec::len);
            if let Some(bad) = s.ids.iter().find(|&&id| id == 0 || id > m) {
                return Err(CaseError::Topology(format!("secure id {bad} outside 1..={m}")));
            }
            Some(s.ids.iter().map(|&id| MeasurementId(id)).collect())
        }
    };

    Ok(CaseFile { name: raw.name.unwrap_or_else(|| "case".into()), bus_count: n, lines, measurements, secure })
}

/// Parses one of the [`BUNDLED`] cases.
pub fn bundled_case(name: &str) -> Result<CaseFile, CaseError> {
    let (_, text) =
        BUNDLED.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).ok_or_else(|| CaseError::UnknownCase(name.into()))?;
    parse_case(text)
}

fn rounded_count(fraction: f64, total: usize) -> Result<usize, CaseError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CaseError::BadFraction(fraction));
    }
    Ok((fraction * total as f64).round_ties_even() as usize)
}

/// Builds a measurement system from `case`, deterministic in `seed`.
///
/// Without a fixed measurement list: a flow on every line (ids `1..`), then
/// angles on `round(angle_fraction·n)` distinct random buses. Without a
/// fixed secure set: `round(secure_fraction·m)` measurements chosen
/// uniformly at random are secure. Rounding is half-to-even.
pub fn place_measurements(
    case: &CaseFile,
    angle_fraction: f64,
    secure_fraction: f64,
    seed: u64,
) -> Result<MeasurementSystem<f64>, CaseError> {
    let n = case.bus_count;
    let n_angles = rounded_count(angle_fraction, n)?;
    rounded_count(secure_fraction, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kinds: Vec<MeasurementKind> = match &case.measurements {
        Some(kinds) => kinds.clone(),
        None => {
            let mut buses = sample(&mut rng, n, n_angles).into_vec();
            buses.sort_unstable();
            case.lines
                .iter()
                .map(|l| MeasurementKind::LineFlow { from: l.from, to: l.to })
                .chain(buses.into_iter().map(|bus| MeasurementKind::PhaseAngle { bus }))
                .collect()
        }
    };
    let m = kinds.len();
    let secure: BTreeSet<MeasurementId> = match &case.secure {
        Some(s) => s.clone(),
        None => {
            let k = rounded_count(secure_fraction, m)?;
            sample(&mut rng, m, k).into_iter().map(|i| MeasurementId(i + 1)).collect()
        }
    };

    let mut flow_count = vec![0usize; case.lines.len()];
    let measurements = kinds
        .iter()
        .enumerate()
        .map(|(i, kind)| {
            let id = i + 1;
            let sec = secure.contains(&MeasurementId(id));
            match *kind {
                MeasurementKind::LineFlow { from, to } => {
                    // parallel lines take their flows in turn
                    let matching: Vec<usize> = (0..case.lines.len())
                        .filter(|&k| {
                            let l = &case.lines[k];
                            (l.from, l.to) == (from, to) || (l.from, l.to) == (to, from)
                        })
                        .collect();
                    let k = *matching.iter().min_by_key(|&&k| flow_count[k]).expect("validated line");
                    flow_count[k] += 1;
                    Measurement::flow(id, from, to, case.lines[k].susceptance, sec)
                }
                MeasurementKind::PhaseAngle { bus } => Measurement::angle(id, bus, sec),
            }
        })
        .collect();
    let sys = MeasurementSystem::new(n, case.lines.clone(), measurements)?;
    build_graph(&sys)?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "[buses]\ncount = 2\n\n[lines]\nlist = [[1, 2]]\n";

    #[test]
    fn minimal_document() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.bus_count, 2);
        assert_eq!(case.lines, vec![Line { from: 0, to: 1, susceptance: 1.0 }]);
        assert!(case.measurements.is_none() && case.secure.is_none());
    }

    #[test]
    fn bundled_sizes() {
        let c14 = bundled_case("ieee14").unwrap();
        assert_eq!((c14.bus_count, c14.lines.len()), (14, 20));
        let c57 = bundled_case("IEEE57").unwrap();
        assert_eq!((c57.bus_count, c57.lines.len()), (57, 80));
        assert!(matches!(bundled_case("ieee999"), Err(CaseError::UnknownCase(_))));
    }

    #[test]
    fn bus_zero_is_topology_error() {
        let text = "[buses]\ncount = 2\n[lines]\nlist = [[0, 2, 1.0]]\n";
        assert!(matches!(parse_case(text), Err(CaseError::Topology(_))));
        let text = "[buses]\ncount = 2\n[lines]\nlist = [[1, 1]]\n";
        assert!(matches!(parse_case(text), Err(CaseError::Topology(_))));
    }

    #[test]
    fn parse_error_has_position() {
        let text = "[buses]\ncount = 2\n[lines]\nlist = [[1, 2]\n";
        match parse_case(text) {
            Err(CaseError::Parse { line, .. }) => assert!(line >= 4, "line {line}"),
            other => panic!("{other:?}"),
        }
        match parse_case("[buses]\ncount = \"x\"\n[lines]\nlist = []\n") {
            Err(CaseError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_measurements_and_secure_set() {
        let text = "[buses]\ncount = 2\n[lines]\nlist = [[1, 2, 4.0]]\n[measurements]\nflows = [[2, 1]]\nangles = [1, 2]\n[secure]\nids = [2]\n";
        let case = parse_case(text).unwrap();
        let sys = place_measurements(&case, 0.0, 0.0, 1).unwrap();
        assert_eq!(sys.len(), 3);
        let secure: Vec<bool> = sys.measurements().iter().map(|m| m.secure).collect();
        assert_eq!(secure, vec![false, true, false]);
        assert_eq!(sys.measurements()[0].susceptance, 4.0);
        let bad = text.replace("ids = [2]", "ids = [4]");
        assert!(matches!(parse_case(&bad), Err(CaseError::Topology(_))));
    }

    #[test]
    fn ieee14_placement() {
        let case = bundled_case("ieee14").unwrap();
        let sys = place_measurements(&case, 0.6, 0.0, 7).unwrap();
        let angles = sys.measurements().iter().filter(|m| matches!(m.kind, MeasurementKind::PhaseAngle { .. }));
        assert_eq!((sys.len(), angles.count()), (28, 8));
        assert!(sys.measurements().iter().all(|m| !m.secure));

        let all = place_measurements(&case, 0.6, 1.0, 7).unwrap();
        assert!(all.measurements().iter().all(|m| m.secure));
        let some = place_measurements(&case, 0.6, 0.25, 7).unwrap();
        assert_eq!(some.measurements().iter().filter(|m| m.secure).count(), 7);

        assert_eq!(place_measurements(&case, 0.6, 0.3, 11), place_measurements(&case, 0.6, 0.3, 11));
        assert_ne!(place_measurements(&case, 0.6, 0.3, 11), place_measurements(&case, 0.6, 0.3, 12));
        assert!(matches!(place_measurements(&case, 1.5, 0.0, 0), Err(CaseError::BadFraction(_))));
    }

    #[test]
    fn round_half_to_even() {
        assert_eq!(rounded_count(0.5, 5).unwrap(), 2);
        assert_eq!(rounded_count(0.5, 7).unwrap(), 4);
        assert_eq!(rounded_count(0.25, 28).unwrap(), 7);
    }
}
