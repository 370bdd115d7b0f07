//! Seeded draws from the oracle families and the lognormal example fixture.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Result, TiltError};
use crate::types::SampleMatrix;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` draws from N(0, cov).
pub fn gaussian_draws(cov: &DMatrix<f64>, n: usize, seed: u64) -> Result<SampleMatrix> {
    let m = cov.nrows();
    let l = cov.clone().cholesky().ok_or(TiltError::NotSpd)?.unpack();
    let mut rng = rng(seed);
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n {
        let z = DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(&mut rng)));
        data.extend((&l * z).iter());
    }
    SampleMatrix::new(data, n, m)
}

/// `n` draws from Poisson(mu), as a one-column sample.
pub fn poisson_draws(mu: f64, n: usize, seed: u64) -> Result<SampleMatrix> {
    let dist = Poisson::new(mu).map_err(|e| TiltError::NonPositive(format!("mu = {mu}: {e}")))?;
    let mut rng = rng(seed);
    let data = (0..n).map(|_| dist.sample(&mut rng)).collect();
    SampleMatrix::new(data, n, 1)
}

/// Bivariate lognormal: `log y ~ N(mu, Σ)` with
/// `Σ = [[v1, r sqrt(v1 v2)], [r sqrt(v1 v2), v2]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalParams {
    pub log_mean: [f64; 2],
    pub log_var: [f64; 2],
    pub log_corr: f64,
    pub draws: usize,
}

impl Default for LognormalParams {
    fn default() -> Self {
        Self { log_mean: [0.0, 0.0], log_var: [0.25, 0.25], log_corr: 0.5, draws: 100_000 }
    }
}

impl LognormalParams {
    pub fn with_corr(log_corr: f64) -> Self {
        Self { log_corr, ..Self::default() }
    }

    pub fn log_cov(&self) -> DMatrix<f64> {
        let [v1, v2] = self.log_var;
        let c = self.log_corr * (v1 * v2).sqrt();
        DMatrix::from_row_slice(2, 2, &[v1, c, c, v2])
    }
}

pub fn lognormal_fixture(params: &LognormalParams, seed: u64) -> Result<SampleMatrix> {
    if !(params.log_corr > -1.0 && params.log_corr < 1.0) {
        return Err(TiltError::InvalidArgument(format!("log correlation {} outside (-1, 1)", params.log_corr)));
    }
    let z = gaussian_draws(&params.log_cov(), params.draws, seed)?;
    let data = z
        .rows()
        .flat_map(|r| [(params.log_mean[0] + r[0]).exp(), (params.log_mean[1] + r[1]).exp()])
        .collect();
    SampleMatrix::new(data, params.draws, 2)
}
