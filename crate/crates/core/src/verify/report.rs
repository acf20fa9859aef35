use serde::{Deserialize, Serialize};

use super::ToleranceClass;
use crate::conformal::TauForm;
use crate::tensorcalc::CurvatureParams;

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selector: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<CurvatureParams>,
    pub class: ToleranceClass,
    /// Largest `max|Δ| / (1 + max|value|)` over points.
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub dimension: usize,
    pub points: usize,
    pub tau_form: TauForm,
    pub corrupted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub environment: Environment,
    pub passed: bool,
    /// Checks that could not run for this instance, with the reason.
    pub skipped: Vec<String>,
    /// Sorted by name.
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed)
    }

    /// Records whose name starts with `prefix`.
    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.name.starts_with(prefix))
    }

    /// Largest deviation among records whose name starts with `prefix`.
    pub fn max_deviation(&self, prefix: &str) -> Option<f64> {
        self.matching(prefix).map(|r| r.deviation).reduce(f64::max)
    }

    pub fn all_pass(&self, prefix: &str) -> bool {
        self.matching(prefix).all(|r| r.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}
