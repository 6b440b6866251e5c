//! Machine-readable verification reports with a stable, versioned schema.

use serde::Serialize;

pub const REPORT_SCHEMA: u32 = 1;

/// One verification check: name, worst residual, the tolerance it was held
/// to, and the verdict.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let name = name.into();
        CheckLine {
            pass: residual <= tolerance,
            name,
            residual,
            tolerance,
        }
    }

    /// A check that already decided its verdict (exact integer identities
    /// record residual 0 or 1).
    pub fn verdict(name: impl Into<String>, pass: bool) -> Self {
        CheckLine {
            name: name.into(),
            residual: if pass { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass,
        }
    }
}

/// The aggregate report emitted by the verification suite.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub seed: u64,
    pub checks: Vec<CheckLine>,
    pub pass: bool,
}

impl Report {
    /// Aggregates checks sorted by name (deterministic output ordering).
    pub fn new(seed: u64, mut checks: Vec<CheckLine>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = checks.iter().all(|c| c.pass);
        Report {
            schema: REPORT_SCHEMA,
            seed,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
