//! Closed-form tilts for the Poisson-mean and zero-mean Gaussian families.
//! Used as oracles for the sample-based solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TiltError};

/// Poisson(mu) baseline with score `y`, tilted to mean `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonTilt {
    pub mu: f64,
    pub target: f64,
    pub tau: f64,
    pub cumulant: f64,
    pub kl: f64,
}

pub fn poisson_tilt(mu: f64, target: f64) -> Result<PoissonTilt> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(TiltError::NonPositive(format!("mu = {mu}")));
    }
    if !(target > 0.0 && target.is_finite()) {
        return Err(TiltError::NonPositive(format!("target = {target}")));
    }
    let tau = (target / mu).ln();
    Ok(PoissonTilt {
        mu,
        target,
        tau,
        cumulant: target - mu,
        kl: mu + target * tau - target,
    })
}

/// N(0, V) baseline with score `y`, tilted to mean `target`: the tilted
/// distribution is N(target, V).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTilt {
    pub cov: DMatrix<f64>,
    /// Precision `V^{-1}`.
    pub precision: DMatrix<f64>,
    pub target: DVector<f64>,
    pub tau: DVector<f64>,
    pub cumulant: f64,
    pub kl: f64,
}

/// Inverse of an SPD matrix through its Cholesky factor.
pub fn spd_inverse(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !v.is_square() || v.nrows() == 0 || v.iter().any(|x| !x.is_finite()) {
        return Err(TiltError::NotSpd);
    }
    if (v - v.transpose()).amax() > 1e-12 * v.amax() {
        return Err(TiltError::NotSpd);
    }
    let chol = v.clone().cholesky().ok_or(TiltError::NotSpd)?;
    let inv = chol.solve(&DMatrix::identity(v.nrows(), v.ncols()));
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Unit-variance bivariate covariance with correlation `rho`.
pub fn bivariate_cov(rho: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
}

pub fn gaussian_tilt(cov: &DMatrix<f64>, target: &DVector<f64>) -> Result<GaussianTilt> {
    if target.len() != cov.nrows() {
        return Err(TiltError::DimensionMismatch { expected: cov.nrows(), got: target.len() });
    }
    let precision = spd_inverse(cov)?;
    let tau = &precision * target;
    let cumulant = (tau.transpose() * cov * &tau)[0] / 2.0;
    let kl = tau.dot(target) / 2.0;
    Ok(GaussianTilt { cov: cov.clone(), precision, target: target.clone(), tau, cumulant, kl })
}

/// True iff the implied expected score `V tau` dominates the baseline
/// score `0` elementwise.
pub fn gaussian_ret_region(cov: &DMatrix<f64>, tau: &DVector<f64>) -> Result<bool> {
    if tau.len() != cov.nrows() {
        return Err(TiltError::DimensionMismatch { expected: cov.nrows(), got: tau.len() });
    }
    spd_inverse(cov)?;
    Ok((cov * tau).iter().all(|&s| s >= 0.0))
}
