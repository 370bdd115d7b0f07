//! Moment-constrained tilting on a Monte Carlo sample.
//!
//! The tilting vector minimizes the convex dual `D(tau) = c(tau) - tau . s`,
//! where `c` is the empirical cumulant. The dual gradient is the tilted mean
//! minus the target and its Hessian is the tilted covariance, so a damped
//! Newton iteration on `D` solves `E_f s(y) = s`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Result, TiltError};
use crate::exec::{self, CompensatedSum, Execution};
use crate::types::{ScoreMatrix, TargetSpec, TiltResult};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const ROUNDOFF_DECREASE: f64 = 1e-12;
/// Largest final Newton correction applied after the gradient test passes.
const POLISH_MAX: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Tolerance on the max-norm of the dual gradient, scaled by `1 + |s|_inf`.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Divergence guard on `|tau|_inf`.
    pub tau_bound: f64,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-10, max_iter: 100, tau_bound: 50.0, execution: Execution::default() }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(TiltError::InvalidOptions(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iter == 0 {
            return Err(TiltError::InvalidOptions("max_iter must be at least 1".into()));
        }
        if !(self.tau_bound > 0.0) {
            return Err(TiltError::InvalidOptions(format!("tau_bound must be positive, got {}", self.tau_bound)));
        }
        Ok(())
    }
}

/// Linear predictor `eta_i = tau . s(y_i)` and its log-sum-exp pieces.
#[derive(Debug, Clone)]
pub(crate) struct LogPartition {
    pub eta: Vec<f64>,
    /// `max_i eta_i`.
    pub shift: f64,
    /// `sum_i exp(eta_i - shift)`.
    pub z: f64,
}

impl LogPartition {
    pub fn compute(tau: &[f64], scores: &ScoreMatrix, exec: Execution) -> Self {
        assert_eq!(tau.len(), scores.num_scores(), "tau length must equal the number of scores");
        let n = scores.nrows();
        let mut eta = vec![0.0; n];
        exec::fill_indexed(exec, &mut eta, |i| {
            scores.row(i).iter().zip(tau).map(|(s, t)| s * t).sum()
        });
        let shift = exec::map_chunks(exec, n, |r| eta[r].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let parts = exec::map_chunks(exec, n, |r| eta[r].iter().map(|e| (e - shift).exp()).collect::<CompensatedSum>());
        let mut acc = CompensatedSum::new();
        for p in &parts {
            acc.merge(p);
        }
        Self { eta, shift, z: acc.value() }
    }

    pub fn cumulant(&self) -> f64 {
        self.shift + self.z.ln() - (self.eta.len() as f64).ln()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        (self.eta[i] - self.shift).exp() / self.z
    }

    pub fn weights(&self, exec: Execution) -> Vec<f64> {
        let mut w = vec![0.0; self.eta.len()];
        exec::fill_indexed(exec, &mut w, |i| self.weight(i));
        w
    }
}

/// Cumulant, tilted mean and tilted covariance at one `tau`.
#[derive(Debug, Clone)]
pub struct TiltStats {
    pub cumulant: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub(crate) fn weighted_moments(lp: &LogPartition, scores: &ScoreMatrix, exec: Execution) -> (DVector<f64>, DMatrix<f64>) {
    let q = scores.num_scores();
    let n = scores.nrows();
    let merge_vec = |parts: Vec<Vec<CompensatedSum>>, len: usize| {
        let mut total = vec![CompensatedSum::new(); len];
        for p in &parts {
            for (t, a) in total.iter_mut().zip(p) {
                t.merge(a);
            }
        }
        total.iter().map(CompensatedSum::value).collect::<Vec<f64>>()
    };

    let parts = exec::map_chunks(exec, n, |r| {
        let mut acc = vec![CompensatedSum::new(); q];
        for i in r {
            let w = lp.weight(i);
            for (a, &s) in acc.iter_mut().zip(scores.row(i)) {
                a.add(w * s);
            }
        }
        acc
    });
    let mean = merge_vec(parts, q);

    let parts = exec::map_chunks(exec, n, |r| {
        let mut acc = vec![CompensatedSum::new(); q * q];
        let mut d = vec![0.0; q];
        for i in r {
            let w = lp.weight(i);
            for ((dj, &s), &m) in d.iter_mut().zip(scores.row(i)).zip(&mean) {
                *dj = s - m;
            }
            for j in 0..q {
                let wd = w * d[j];
                for k in 0..=j {
                    acc[j * q + k].add(wd * d[k]);
                }
            }
        }
        acc
    });
    let lower = merge_vec(parts, q * q);
    let mut cov = DMatrix::zeros(q, q);
    for j in 0..q {
        for k in 0..=j {
            cov[(j, k)] = lower[j * q + k];
            cov[(k, j)] = lower[j * q + k];
        }
    }
    (DVector::from_vec(mean), cov)
}

pub fn tilt_stats(tau: &DVector<f64>, scores: &ScoreMatrix, exec: Execution) -> TiltStats {
    let lp = LogPartition::compute(tau.as_slice(), scores, exec);
    let (mean, cov) = weighted_moments(&lp, scores, exec);
    TiltStats { cumulant: lp.cumulant(), mean, cov }
}

/// Empirical cumulant `c(tau) = log((1/I) sum_i exp(tau . s(y_i)))`.
pub fn cumulant(tau: &DVector<f64>, scores: &ScoreMatrix) -> f64 {
    LogPartition::compute(tau.as_slice(), scores, Execution::default()).cumulant()
}

/// Tilted mean and covariance (1/I-normalized at `tau = 0`).
pub fn tilted_moments(tau: &DVector<f64>, scores: &ScoreMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let s = tilt_stats(tau, scores, Execution::default());
    (s.mean, s.cov)
}

/// Cholesky factor of a covariance, rejecting numerically singular ones.
pub(crate) fn spd_factor(cov: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = cov.diagonal().amax();
    if !(scale > 0.0) || cov.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let chol = cov.clone().cholesky()?;
    let min_pivot = chol.l_dirty().diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    (min_pivot > 1e-13 * scale).then_some(chol)
}

/// `d tau / d s' = V_f(s(y))^{-1}` at the given `tau`.
pub fn tau_sensitivity(tau: &DVector<f64>, scores: &ScoreMatrix) -> Result<DMatrix<f64>> {
    let (_, cov) = tilted_moments(tau, scores);
    let chol = spd_factor(&cov).ok_or(TiltError::SingularHessian)?;
    let mut inv = chol.solve(&DMatrix::identity(cov.nrows(), cov.ncols()));
    inv = (&inv + inv.transpose()) * 0.5;
    Ok(inv)
}

fn column_is_constant(scores: &ScoreMatrix, j: usize) -> Option<f64> {
    let first = scores.get(0, j);
    scores.rows().all(|r| r[j] == first).then_some(first)
}

/// Solve for `tau` with `E_f s(y) = s` exactly, whatever the target's mode.
pub fn solve_moment(scores: &ScoreMatrix, spec: &TargetSpec, opts: &SolverOptions) -> Result<TiltResult> {
    opts.validate()?;
    let q = scores.num_scores();
    if spec.len() != q {
        return Err(TiltError::DimensionMismatch { expected: q, got: spec.len() });
    }

    // Constant columns cannot be tilted; they are either satisfied already or
    // infeasible, and otherwise would make the Hessian singular.
    let mut active = Vec::with_capacity(q);
    for j in 0..q {
        match column_is_constant(scores, j) {
            Some(v) if v == spec.target[j] => {}
            Some(v) => {
                return Err(TiltError::InfeasibleTarget(format!(
                    "score {j} is constant at {v} but the target is {}",
                    spec.target[j]
                )))
            }
            None => active.push(j),
        }
    }

    let mut tau = DVector::zeros(q);
    let mut iterations = 0;
    if !active.is_empty() {
        let reduced;
        let (sub, target) = if active.len() == q {
            (scores, spec.target.clone())
        } else {
            reduced = scores.select_columns(&active)?;
            (&reduced, DVector::from_iterator(active.len(), active.iter().map(|&j| spec.target[j])))
        };
        let (t, it) = newton(sub, &target, opts)?;
        for (k, &j) in active.iter().enumerate() {
            tau[j] = t[k];
        }
        iterations = it;
    }

    Ok(evaluate_tilt(tau, scores, &spec.target, iterations, opts.execution))
}

/// Weights, moments and divergence of the tilt `tau` against `target`.
///
/// The result is marked converged; callers that have not solved for `tau`
/// should check `achieved_mean` themselves.
pub fn evaluate_tilt(
    tau: DVector<f64>,
    scores: &ScoreMatrix,
    target: &DVector<f64>,
    iterations: usize,
    exec: Execution,
) -> TiltResult {
    let lp = LogPartition::compute(tau.as_slice(), scores, exec);
    let (mean, cov) = weighted_moments(&lp, scores, exec);
    let weights = lp.weights(exec);
    let cum = lp.cumulant();
    let ess = crate::diagnostics::ess_of(&weights, exec);
    TiltResult {
        kl: tau.dot(target) - cum,
        cumulant: cum,
        tau,
        weights,
        ess,
        achieved_mean: mean,
        achieved_cov: cov,
        iterations,
        converged: true,
    }
}

fn newton(scores: &ScoreMatrix, target: &DVector<f64>, opts: &SolverOptions) -> Result<(DVector<f64>, usize)> {
    let exec = opts.execution;
    let q = target.len();
    let tol = opts.grad_tol * (1.0 + target.amax());
    let dual = |tau: &DVector<f64>| LogPartition::compute(tau.as_slice(), scores, exec).cumulant() - tau.dot(target);

    // Small-perturbation start: tau0 = V0^{-1} (s - s0).
    let mut tau = DVector::zeros(q);
    let base = tilt_stats(&tau, scores, exec);
    if let Some(chol) = spd_factor(&base.cov) {
        let start = chol.solve(&(target - &base.mean));
        if start.iter().all(|v| v.is_finite()) && start.amax() <= opts.tau_bound && dual(&start) < -base.cumulant {
            tau = start;
        }
    }

    let mut last_singular = false;
    for iter in 0..opts.max_iter {
        let stats = tilt_stats(&tau, scores, exec);
        let grad = &stats.mean - target;
        let grad_norm = grad.amax();
        if grad_norm <= tol {
            // The gradient test leaves |tau error| ~ |V^{-1} grad|; one more
            // Newton step removes it when the curvature is small. A gradient
            // at round-off level carries no information and is left alone.
            let resolvable = grad_norm > 8.0 * f64::EPSILON * (1.0 + target.amax());
            if let Some(chol) = spd_factor(&stats.cov).filter(|_| resolvable) {
                let polish = chol.solve(&(-&grad));
                if polish.iter().all(|v| v.is_finite()) && polish.amax() <= POLISH_MAX * (1.0 + tau.amax()) {
                    tau += polish;
                }
            }
            return Ok((tau, iter));
        }

        let (mut dir, singular) = match spd_factor(&stats.cov) {
            Some(chol) => (chol.solve(&(-&grad)), false),
            None => (-&grad, true),
        };
        last_singular = singular;
        let mut slope = grad.dot(&dir);
        if !(slope < 0.0) {
            dir = -&grad;
            slope = -grad.dot(&grad);
        }

        let d0 = stats.cumulant - tau.dot(target);
        // In the quadratic regime the predicted decrease is below the
        // round-off of D itself, so the Armijo test is meaningless there.
        if !singular && -slope < ROUNDOFF_DECREASE * (1.0 + d0.abs()) {
            tau += dir;
            continue;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &tau + &dir * step;
            let d = dual(&trial);
            if d.is_finite() && d <= d0 + ARMIJO * step * slope {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => tau = next,
            // Descent is below round-off: accept if the gradient is already small.
            None if grad_norm <= 10.0 * tol => return Ok((tau, iter + 1)),
            None => {
                return Err(TiltError::InfeasibleTarget(format!(
                    "line search failed with gradient max-norm {grad_norm:e}; target is likely outside the sample's score hull"
                )))
            }
        }
        if tau.amax() > opts.tau_bound {
            return Err(TiltError::InfeasibleTarget(format!(
                "|tau|_inf exceeded {}; target is likely outside the sample's score hull",
                opts.tau_bound
            )));
        }
    }

    let stats = tilt_stats(&tau, scores, exec);
    let final_norm = (&stats.mean - target).amax();
    if final_norm <= tol {
        return Ok((tau, opts.max_iter));
    }
    if last_singular {
        return Err(TiltError::SingularHessian);
    }
    Err(TiltError::MaxIterations { iterations: opts.max_iter, grad_norm: final_norm })
}
