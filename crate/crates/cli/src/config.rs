//! TOML run configuration.
//!
//! ```toml
//! samples = "fixture.csv"      # relative to this file
//! output_dir = "out"
//! seed = 7
//! resample_n = 1000            # optional
//! histogram_bins = 40          # optional
//! scatter_n = 2000             # optional
//!
//! [solver]                     # optional
//! grad_tol = 1e-10
//! max_iter = 100
//! tau_bound = 50.0
//! execution = "parallel"       # or "sequential"
//!
//! # exactly one of:
//! [moment]
//! functionals = ["y1", "sum", { linear = [1.0, -1.0] }, "y2/y1"]
//! targets = [1.2, 2.5, 0.0, 1.1]
//! mode = "exact"               # or "lower-bound"
//!
//! [quantile]
//! functional = "sum"
//! cutpoints = [1.5, 2.0, 2.6]
//! probs = [0.25, 0.25, 0.25]
//!
//! [relative_shift]
//! functional = "sum"
//! levels = [0.25, 0.5, 0.75]
//! shifts = [0.05, 0.15, 0.20]
//! ```
//!
//! Coordinates in functional names are 1-based.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tilt_core::scores::Functional;
use tilt_core::solver::SolverOptions;
use tilt_core::{Execution, TargetMode};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum FunctionalSpec {
    Name(String),
    Linear { linear: Vec<f64> },
}

fn coordinate(s: &str) -> Option<usize> {
    let k: usize = s.strip_prefix('y')?.parse().ok()?;
    k.checked_sub(1)
}

/// Parse `"sum"`, `"yK"` or `"yA/yB"` (1-based).
pub fn parse_functional(name: &str) -> Result<Functional> {
    let name = name.trim();
    let bad = || CliError::Config(format!("unknown functional {name:?}"));
    if name == "sum" {
        return Ok(Functional::Sum);
    }
    if let Some((a, b)) = name.split_once('/') {
        let num = coordinate(a.trim()).ok_or_else(bad)?;
        let den = coordinate(b.trim()).ok_or_else(bad)?;
        return Ok(Functional::Ratio { num, den });
    }
    coordinate(name).map(Functional::Coordinate).ok_or_else(bad)
}

impl FunctionalSpec {
    fn resolve(self) -> Result<Functional> {
        match self {
            FunctionalSpec::Name(n) => parse_functional(&n),
            FunctionalSpec::Linear { linear } => Ok(Functional::Linear(linear)),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    grad_tol: Option<f64>,
    max_iter: Option<usize>,
    tau_bound: Option<f64>,
    execution: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentSection {
    functionals: Vec<FunctionalSpec>,
    targets: Vec<f64>,
    #[serde(default)]
    mode: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantileSection {
    functional: FunctionalSpec,
    cutpoints: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftSection {
    functional: FunctionalSpec,
    levels: Vec<f64>,
    shifts: Vec<f64>,
}

fn default_bins() -> usize {
    40
}

fn default_scatter() -> usize {
    2000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    samples: PathBuf,
    output_dir: PathBuf,
    seed: u64,
    resample_n: Option<usize>,
    #[serde(default = "default_bins")]
    histogram_bins: usize,
    #[serde(default = "default_scatter")]
    scatter_n: usize,
    #[serde(default)]
    solver: SolverSection,
    moment: Option<MomentSection>,
    quantile: Option<QuantileSection>,
    relative_shift: Option<ShiftSection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Moment { functionals: Vec<Functional>, targets: Vec<f64>, mode: TargetMode },
    Quantile { functional: Functional, cutpoints: Vec<f64>, probs: Vec<f64> },
    RelativeShift { functional: Functional, levels: Vec<f64>, shifts: Vec<f64> },
}

impl Constraint {
    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::Moment { .. } => "moment",
            Constraint::Quantile { .. } => "quantile",
            Constraint::RelativeShift { .. } => "relative_shift",
        }
    }

    pub fn functionals(&self) -> Vec<Functional> {
        match self {
            Constraint::Moment { functionals, .. } => functionals.clone(),
            Constraint::Quantile { functional, .. } | Constraint::RelativeShift { functional, .. } => {
                vec![functional.clone()]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub samples_path: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub resample_n: Option<usize>,
    pub histogram_bins: usize,
    pub scatter_n: usize,
    pub solver: SolverOptions,
    pub constraint: Constraint,
}

impl RunConfig {
    /// Parse a config; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let blocks = [raw.moment.is_some(), raw.quantile.is_some(), raw.relative_shift.is_some()];
        if blocks.iter().filter(|&&b| b).count() != 1 {
            return Err(CliError::Config(
                "exactly one of [moment], [quantile], [relative_shift] is required".into(),
            ));
        }
        let constraint = if let Some(m) = raw.moment {
            let mode = match m.mode.as_deref() {
                None | Some("exact") => TargetMode::Exact,
                Some("lower-bound") => TargetMode::LowerBound,
                Some(other) => return Err(CliError::Config(format!("unknown mode {other:?}"))),
            };
            if m.functionals.len() != m.targets.len() {
                return Err(CliError::Config(format!(
                    "{} functionals but {} targets",
                    m.functionals.len(),
                    m.targets.len()
                )));
            }
            let functionals = m.functionals.into_iter().map(FunctionalSpec::resolve).collect::<Result<_>>()?;
            Constraint::Moment { functionals, targets: m.targets, mode }
        } else if let Some(q) = raw.quantile {
            Constraint::Quantile { functional: q.functional.resolve()?, cutpoints: q.cutpoints, probs: q.probs }
        } else if let Some(r) = raw.relative_shift {
            Constraint::RelativeShift { functional: r.functional.resolve()?, levels: r.levels, shifts: r.shifts }
        } else {
            unreachable!()
        };

        let mut solver = SolverOptions::default();
        if let Some(t) = raw.solver.grad_tol {
            solver.grad_tol = t;
        }
        if let Some(n) = raw.solver.max_iter {
            solver.max_iter = n;
        }
        if let Some(b) = raw.solver.tau_bound {
            solver.tau_bound = b;
        }
        solver.execution = match raw.solver.execution.as_deref() {
            None | Some("parallel") => Execution::Parallel,
            Some("sequential") => Execution::Sequential,
            Some(other) => return Err(CliError::Config(format!("unknown execution {other:?}"))),
        };
        solver.validate()?;
        if raw.histogram_bins == 0 {
            return Err(CliError::Config("histogram_bins must be positive".into()));
        }

        Ok(RunConfig {
            samples_path: base_dir.join(raw.samples),
            output_dir: base_dir.join(raw.output_dir),
            seed: raw.seed,
            resample_n: raw.resample_n,
            histogram_bins: raw.histogram_bins,
            scatter_n: raw.scatter_n,
            solver,
            constraint,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }
}
