//! Quantile constraints expressed as relative shifts of baseline quantiles.

use tilt_core::scores::{eval_functional, Functional, QuantileConstraint};
use tilt_core::{SampleMatrix, TiltError};

use crate::error::{CliError, Result};

/// Type-7 (linear interpolation) empirical quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Cutpoints at the baseline quantiles of `phi` scaled by `1 + shift`, with
/// region probabilities equal to the gaps between levels.
pub fn resolve_relative_shift(
    samples: &SampleMatrix,
    functional: &Functional,
    levels: &[f64],
    shifts: &[f64],
) -> Result<QuantileConstraint> {
    if levels.is_empty() || levels.len() != shifts.len() {
        return Err(TiltError::InvalidQuantileConstraint(format!(
            "{} levels and {} shifts",
            levels.len(),
            shifts.len()
        ))
        .into());
    }
    if levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TiltError::InvalidQuantileConstraint("levels must be strictly increasing in (0, 1)".into()).into());
    }
    if shifts.iter().any(|s| !s.is_finite()) {
        return Err(TiltError::InvalidQuantileConstraint("shifts must be finite".into()).into());
    }
    let mut phi = eval_functional(functional, samples)?;
    phi.sort_by(f64::total_cmp);
    let cutpoints: Vec<f64> =
        levels.iter().zip(shifts).map(|(&l, &s)| empirical_quantile(&phi, l) * (1.0 + s)).collect();
    if cutpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::NonMonotoneCutpoints(cutpoints));
    }
    let probs = levels.iter().scan(0.0, |prev, &l| Some(l - std::mem::replace(prev, l))).collect();
    Ok(QuantileConstraint::new(functional.clone(), cutpoints, probs)?)
}
