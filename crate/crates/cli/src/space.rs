//! JSON space files.

use std::collections::HashSet;
use std::path::Path;

use grweyl::verify::uniform_points;
use grweyl::{parse_expr, Expr, ExprPool, MetricField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Seeded uniform sampling of evaluation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// `[lo, hi]` for every coordinate.
    #[serde(rename = "box")]
    pub sample_box: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub dimension: usize,
    pub coords: Vec<String>,
    /// Row-major `G_ij` as expression strings.
    pub metric: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Sampler>,
}

/// A space file with its expressions parsed into a pool.
#[derive(Clone, Debug)]
pub struct Space {
    pub metric: MetricField,
    pub psi: Option<Expr>,
    pub file: SpaceFile,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SpaceFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let file: SpaceFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.dimension;
        if !(2..=4).contains(&n) {
            return Err(CliError::Usage(format!(
                "dimension must be 2, 3 or 4, got {n}"
            )));
        }
        if self.coords.len() != n {
            return Err(CliError::Usage(format!(
                "{} coordinate names for dimension {n}",
                self.coords.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.coords {
            if !is_identifier(c) || !seen.insert(c) {
                return Err(CliError::Usage(format!(
                    "bad or repeated coordinate name `{c}`"
                )));
            }
        }
        if self.metric.len() != n || self.metric.iter().any(|row| row.len() != n) {
            return Err(CliError::Usage(format!("metric must be {n}x{n}")));
        }
        for p in self.points.iter().flatten() {
            if p.len() != n {
                return Err(CliError::Usage(format!(
                    "point {p:?} does not have {n} coordinates"
                )));
            }
        }
        if let Some(s) = &self.sampler {
            let [lo, hi] = s.sample_box;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::Usage(format!("invalid sampler box [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn parse(&self, pool: &mut ExprPool) -> Result<Space, CliError> {
        let metric = MetricField::parse(pool, &self.coords, &self.metric)?;
        let psi = self
            .psi
            .as_deref()
            .map(|s| parse_expr(pool, s, &self.coords))
            .transpose()?;
        Ok(Space {
            metric,
            psi,
            file: self.clone(),
        })
    }

    /// Explicit points followed by sampled ones. Empty when neither is given.
    pub fn evaluation_points(&self) -> Vec<Vec<f64>> {
        let mut out = self.points.clone().unwrap_or_default();
        if let Some(s) = &self.sampler {
            out.extend(uniform_points(
                s.seed,
                self.dimension,
                s.count,
                s.sample_box,
            ));
        }
        out
    }

    /// Serializes `metric` and `psi` back to expression text.
    pub fn from_fields(pool: &ExprPool, metric: &MetricField, psi: Option<Expr>) -> Self {
        let coords = metric.coords().to_vec();
        let n = metric.dim();
        let text = |e: Expr| pool.display(e, &coords).to_string();
        SpaceFile {
            dimension: n,
            metric: (0..n)
                .map(|i| (0..n).map(|j| text(metric.get(i, j))).collect())
                .collect(),
            psi: psi.map(text),
            coords: coords.clone(),
            points: None,
            sampler: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space file is plain data")
    }
}
