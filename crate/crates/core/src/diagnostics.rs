//! Importance-sampling outputs and decision summaries: weights, effective
//! sample size, resampling, KL calibration, relaxed (lower-bound) tilting
//! and small-perturbation approximations.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::spd_inverse;
use crate::error::{Result, TiltError};
use crate::exec::{self, Execution};
use crate::scores::baseline_expected_scores;
use crate::solver::{solve_moment, LogPartition, SolverOptions};
use crate::types::{SampleMatrix, ScoreMatrix, TargetMode, TargetSpec, TiltResult};

/// Normalized, nonnegative importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(TiltError::Empty);
        }
        if let Some(k) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(TiltError::InvalidArgument(format!("weight {k} is {}", w[k])));
        }
        let total = exec::compensated_sum(Execution::default(), &w);
        if (total - 1.0).abs() > 1e-12 {
            return Err(TiltError::InvalidArgument(format!("weights sum to {total}")));
        }
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `w_i ∝ exp(tau . s(y_i))`, via a max-shifted softmax.
pub fn compute_weights(tau: &DVector<f64>, scores: &ScoreMatrix) -> WeightVector {
    let exec = Execution::default();
    WeightVector(LogPartition::compute(tau.as_slice(), scores, exec).weights(exec))
}

pub(crate) fn ess_of(w: &[f64], exec: Execution) -> f64 {
    let sq: Vec<f64> = w.iter().map(|x| x * x).collect();
    1.0 / exec::compensated_sum(exec, &sq)
}

/// Effective sample size `1 / sum w_i^2`.
pub fn ess(w: &WeightVector) -> f64 {
    ess_of(&w.0, Execution::default())
}

/// Weighted column means `sum_i w_i s(y_i)`.
pub fn weighted_means(w: &WeightVector, scores: &ScoreMatrix) -> Result<Vec<f64>> {
    if w.len() != scores.nrows() {
        return Err(TiltError::DimensionMismatch { expected: scores.nrows(), got: w.len() });
    }
    let n = w.len() as f64;
    let scaled: Vec<Vec<f64>> = scores.rows().zip(&w.0).map(|(r, wi)| r.iter().map(|s| s * wi * n).collect()).collect();
    Ok(baseline_expected_scores(&ScoreMatrix::from_rows(&scaled)?))
}

/// Multinomial resampling of `n` draws by weight, seeded.
pub fn resample(w: &WeightVector, samples: &SampleMatrix, n: usize, seed: u64) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(TiltError::InvalidArgument("resample size must be at least 1".into()));
    }
    if w.len() != samples.draws() {
        return Err(TiltError::DimensionMismatch { expected: samples.draws(), got: w.len() });
    }
    let idx = resample_indices(w, n, seed)?;
    samples.select_rows(&idx)
}

/// Draw indices for [`resample`].
pub fn resample_indices(w: &WeightVector, n: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(&w.0).map_err(|e| TiltError::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// `kappa = tau . s - c(tau)`.
pub fn kl_value(tau: &DVector<f64>, target: &DVector<f64>, cumulant: f64) -> f64 {
    tau.dot(target) - cumulant
}

/// Posterior probability of the tilted model under a 50:50 prior when its
/// expected log Bayes factor is `kappa`.
pub fn calibrate_bayes_factor(kappa: f64) -> f64 {
    if kappa >= 0.0 {
        1.0 / (1.0 + (-kappa).exp())
    } else {
        let e = kappa.exp();
        e / (1.0 + e)
    }
}

/// Relaxed tilting: the optimum over `E_f s(y) >= bound` sits at the bound.
pub fn ret_solve(scores: &ScoreMatrix, bound: &TargetSpec, opts: &SolverOptions) -> Result<TiltResult> {
    if bound.mode != TargetMode::LowerBound {
        return Err(TiltError::InvalidArgument("relaxed tilting needs a lower-bound target".into()));
    }
    if bound.len() != scores.num_scores() {
        return Err(TiltError::DimensionMismatch { expected: scores.num_scores(), got: bound.len() });
    }
    let s0 = baseline_expected_scores(scores);
    let dominates = bound.target.iter().zip(&s0).all(|(b, s)| b >= s);
    let strict = bound.target.iter().zip(&s0).any(|(b, s)| b > s);
    if !(dominates && strict) {
        return Err(TiltError::BoundNotAboveBaseline);
    }
    solve_moment(scores, bound, opts)
}

/// Relaxed-tilting check on a grid: KL at the bound versus every target on a
/// `steps^q` grid dominating it.
#[derive(Debug, Clone, PartialEq)]
pub struct RetGridCheck {
    pub kl_bound: f64,
    /// Smallest KL found over grid points (the bound itself excluded).
    pub min_grid_kl: f64,
    pub points: usize,
}

pub fn ret_grid_check(
    scores: &ScoreMatrix,
    bound: &TargetSpec,
    step: &[f64],
    steps: usize,
    opts: &SolverOptions,
) -> Result<RetGridCheck> {
    let q = bound.len();
    if step.len() != q || steps == 0 {
        return Err(TiltError::InvalidArgument("need one positive step per score and at least one grid step".into()));
    }
    let at_bound = ret_solve(scores, bound, opts)?;
    let mut min_grid_kl = f64::INFINITY;
    let mut points = 0;
    let total = (steps + 1).pow(q as u32);
    for code in 1..total {
        let mut c = code;
        let mut target = bound.target.clone();
        for j in 0..q {
            target[j] += (c % (steps + 1)) as f64 * step[j];
            c /= steps + 1;
        }
        let r = solve_moment(scores, &TargetSpec { target, mode: TargetMode::Exact }, opts)?;
        min_grid_kl = min_grid_kl.min(r.kl);
        points += 1;
    }
    Ok(RetGridCheck { kl_bound: at_bound.kl, min_grid_kl, points })
}

/// First-order tilt around the baseline for target increment `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationApprox {
    pub epsilon: DVector<f64>,
    pub tau_approx: DVector<f64>,
    /// Increment `V tau_approx` to add to the baseline expected scores.
    pub s_approx: DVector<f64>,
    pub kl_approx: f64,
}

/// `tau ≈ Λ ε`, `s - s0 ≈ V tau`, `kappa ≈ ε' Λ ε / 2` with `Λ = V^{-1}`.
pub fn perturbation_approx(baseline_cov: &DMatrix<f64>, epsilon: &DVector<f64>) -> Result<PerturbationApprox> {
    if epsilon.len() != baseline_cov.nrows() {
        return Err(TiltError::DimensionMismatch { expected: baseline_cov.nrows(), got: epsilon.len() });
    }
    let precision = spd_inverse(baseline_cov)?;
    let tau_approx = &precision * epsilon;
    let s_approx = baseline_cov * &tau_approx;
    let kl_approx = epsilon.dot(&tau_approx) / 2.0;
    Ok(PerturbationApprox { epsilon: epsilon.clone(), tau_approx, s_approx, kl_approx })
}

/// Errors of the first-order approximation along one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationErrors {
    pub deltas: Vec<f64>,
    /// `|tau_solver(s0 + δ d) - Λ δ d|_inf` per delta.
    pub errors: Vec<f64>,
    /// `errors[k] / errors[k + 1]`; about 4 under halving for a second-order remainder.
    pub ratios: Vec<f64>,
}

pub fn second_order_error_check(
    scores: &ScoreMatrix,
    baseline_cov: &DMatrix<f64>,
    direction: &DVector<f64>,
    deltas: &[f64],
    opts: &SolverOptions,
) -> Result<PerturbationErrors> {
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(TiltError::InvalidArgument("deltas must be finite and nonnegative".into()));
    }
    let s0 = DVector::from_vec(baseline_expected_scores(scores));
    let mut errors = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let eps = direction * delta;
        let approx = perturbation_approx(baseline_cov, &eps)?;
        let exact = solve_moment(scores, &TargetSpec { target: &s0 + &eps, mode: TargetMode::Exact }, opts)?;
        errors.push((exact.tau - approx.tau_approx).amax());
    }
    let ratios = errors.windows(2).map(|e| e[0] / e[1]).collect();
    Ok(PerturbationErrors { deltas: deltas.to_vec(), errors, ratios })
}
