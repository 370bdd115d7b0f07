//! Text output for the closed-form oracles.

use tilt_core::analytic::{bivariate_cov, gaussian_tilt, poisson_tilt};
use tilt_core::{DVector, Result};

fn fmt(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn fmt_all(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(", ")
}

pub fn poisson_report(mu: f64, target: f64) -> Result<String> {
    let t = poisson_tilt(mu, target)?;
    Ok(format!("tau = {}\ncumulant = {}\nkl = {}\n", fmt(t.tau), fmt(t.cumulant), fmt(t.kl)))
}

/// Unit-variance bivariate normal with correlation `rho`.
pub fn gaussian_report(rho: f64, target: &[f64]) -> Result<String> {
    let t = gaussian_tilt(&bivariate_cov(rho), &DVector::from_column_slice(target))?;
    Ok(format!(
        "tau = {}\ncumulant = {}\nkl = {}\n",
        fmt_all(t.tau.as_slice()),
        fmt(t.cumulant),
        fmt(t.kl)
    ))
}
