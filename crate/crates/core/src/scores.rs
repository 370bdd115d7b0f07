//! Score functions: moment scores over scalar functionals of a draw, and
//! interval-indicator scores for quantile constraints.

use crate::error::{Result, TiltError};
use crate::exec::{self, CompensatedSum, Execution};
use crate::types::{SampleMatrix, ScoreMatrix};

/// A scalar function `phi(y)` of one draw.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    /// `y_j`.
    Coordinate(usize),
    /// `1'y`.
    Sum,
    /// `a'y`.
    Linear(Vec<f64>),
    /// `y_num / y_den`.
    Ratio { num: usize, den: usize },
}

impl Functional {
    /// Check indices and coefficients against dimension `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(TiltError::InvalidFunctional(msg));
        match self {
            Functional::Coordinate(j) if *j >= m => bad(format!("coordinate {j} out of range for m={m}")),
            Functional::Linear(a) if a.len() != m => {
                bad(format!("linear coefficients have length {}, expected {m}", a.len()))
            }
            Functional::Linear(a) if a.iter().any(|x| !x.is_finite()) => {
                bad("linear coefficients must be finite".into())
            }
            Functional::Linear(a) if a.iter().all(|&x| x == 0.0) => {
                bad("linear coefficients are all zero".into())
            }
            Functional::Ratio { num, den } if *num >= m || *den >= m => {
                bad(format!("ratio indices ({num}, {den}) out of range for m={m}"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    fn apply(&self, y: &[f64]) -> f64 {
        match self {
            Functional::Coordinate(j) => y[*j],
            Functional::Sum => y.iter().sum(),
            Functional::Linear(a) => a.iter().zip(y).map(|(a, y)| a * y).sum(),
            Functional::Ratio { num, den } => y[*num] / y[*den],
        }
    }

    /// Short label used in reports and plot-data file names.
    pub fn label(&self) -> String {
        match self {
            Functional::Coordinate(j) => format!("y{}", j + 1),
            Functional::Sum => "sum".into(),
            Functional::Linear(_) => "linear".into(),
            Functional::Ratio { num, den } => format!("y{}_over_y{}", num + 1, den + 1),
        }
    }
}

/// Evaluate `phi(y_i)` for every draw.
pub fn eval_functional(phi: &Functional, samples: &SampleMatrix) -> Result<Vec<f64>> {
    phi.validate(samples.dim())?;
    if let Functional::Ratio { den, .. } = phi {
        if let Some(row) = samples.rows().position(|y| y[*den] == 0.0) {
            return Err(TiltError::RatioDivisionByZero { row });
        }
    }
    let mut out = vec![0.0; samples.draws()];
    exec::fill_indexed(Execution::default(), &mut out, |i| phi.apply(samples.row(i)));
    if let Some(row) = out.iter().position(|v| !v.is_finite()) {
        return Err(TiltError::NonFinite { row, col: 0 });
    }
    Ok(out)
}

/// Ordered list of functionals whose expectations are constrained.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentScoreSpec {
    functionals: Vec<Functional>,
}

impl MomentScoreSpec {
    pub fn new(functionals: Vec<Functional>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(TiltError::InvalidFunctional("at least one functional is required".into()));
        }
        Ok(Self { functionals })
    }

    pub fn functionals(&self) -> &[Functional] {
        &self.functionals
    }
}

pub fn eval_moment_scores(spec: &MomentScoreSpec, samples: &SampleMatrix) -> Result<ScoreMatrix> {
    let cols = spec
        .functionals
        .iter()
        .map(|phi| eval_functional(phi, samples))
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::from_columns(&cols)
}

/// Interval probabilities for one functional.
///
/// Intervals are `(f_{i-1}, f_i]` with `f_0 = -inf`; the tail region above the
/// last cutpoint is implicit and carries probability `1 - sum(probs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileConstraint {
    functional: Functional,
    cutpoints: Vec<f64>,
    probs: Vec<f64>,
}

impl QuantileConstraint {
    pub fn new(functional: Functional, cutpoints: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(TiltError::InvalidQuantileConstraint(msg));
        if cutpoints.is_empty() {
            return bad("at least one cutpoint is required".into());
        }
        if cutpoints.len() != probs.len() {
            return bad(format!("{} cutpoints but {} probabilities", cutpoints.len(), probs.len()));
        }
        if cutpoints.iter().chain(&probs).any(|x| !x.is_finite()) {
            return bad("cutpoints and probabilities must be finite".into());
        }
        if cutpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("cutpoints must be strictly increasing".into());
        }
        if probs.iter().any(|&p| p <= 0.0) {
            return bad("every interval probability must be positive".into());
        }
        let total: f64 = probs.iter().sum();
        if total >= 1.0 {
            return bad(format!("probabilities sum to {total}; the tail region needs positive mass"));
        }
        Ok(Self { functional, cutpoints, probs })
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    pub fn cutpoints(&self) -> &[f64] {
        &self.cutpoints
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability on the implicit tail region.
    pub fn tail_prob(&self) -> f64 {
        1.0 - self.probs.iter().sum::<f64>()
    }

    /// All `q + 1` region probabilities, tail last.
    pub fn region_probs(&self) -> Vec<f64> {
        let mut p = self.probs.clone();
        p.push(self.tail_prob());
        p
    }

    /// Index of the interval containing `v`; `q` means the tail region.
    pub fn region_of(&self, v: f64) -> usize {
        // first cutpoint with v <= f_j
        self.cutpoints.partition_point(|&f| f < v)
    }
}

/// Indicator scores `s_j(y) = 1{phi(y) in (f_{j-1}, f_j]}`.
pub fn eval_quantile_scores(qc: &QuantileConstraint, samples: &SampleMatrix) -> Result<ScoreMatrix> {
    let phi = eval_functional(&qc.functional, samples)?;
    indicator_scores(qc, &phi)
}

/// Indicator scores from precomputed functional values.
pub fn indicator_scores(qc: &QuantileConstraint, phi: &[f64]) -> Result<ScoreMatrix> {
    let q = qc.cutpoints.len();
    let mut data = vec![0.0; phi.len() * q];
    for (row, &v) in data.chunks_exact_mut(q).zip(phi) {
        let k = qc.region_of(v);
        if k < q {
            row[k] = 1.0;
        }
    }
    ScoreMatrix::new(data, phi.len(), q)
}

/// Column means: the baseline expected scores `s_0`.
pub fn baseline_expected_scores(scores: &ScoreMatrix) -> Vec<f64> {
    let q = scores.num_scores();
    let n = scores.nrows();
    let parts = exec::map_chunks(Execution::default(), n, |r| {
        let mut acc = vec![CompensatedSum::new(); q];
        for i in r {
            for (a, &v) in acc.iter_mut().zip(scores.row(i)) {
                a.add(v);
            }
        }
        acc
    });
    let mut total = vec![CompensatedSum::new(); q];
    for p in &parts {
        for (t, a) in total.iter_mut().zip(p) {
            t.merge(a);
        }
    }
    total.iter().map(|t| t.value() / n as f64).collect()
}
