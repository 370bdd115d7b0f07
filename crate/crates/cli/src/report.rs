//! The JSON run report. Field order is fixed by declaration order.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSummary {
    pub kind: String,
    pub functionals: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutpoints: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub name: String,
    pub baseline: f64,
    pub target: f64,
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltSummary {
    pub tau: Vec<f64>,
    pub cumulant: f64,
    pub kl: f64,
    pub calibrated_probability: f64,
    pub ess: f64,
    pub ess_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
    pub table: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub status: String,
    pub error: Option<ErrorInfo>,
    pub constraint: ConstraintSummary,
    pub draws: usize,
    pub seed: u64,
    pub result: Option<TiltSummary>,
    /// Wall time of the run; logged, not written, so reports stay byte-stable.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.result.as_ref().is_some_and(|r| r.converged)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(CliError::io(path))
    }
}
