//! Entropic tilting of Monte Carlo predictive samples.
//!
//! Given draws `y_i` from a baseline predictive `p(y)` and score functions
//! `s(y)`, tilting finds the KL-closest distribution `f(y) ∝ p(y) exp(tau'
//! s(y))` whose expected scores hit a target (or, in relaxed form, dominate a
//! lower bound). On a sample this reduces to importance weights
//! `w_i ∝ exp(tau' s(y_i))`.
//!
//! Modules:
//! - [`types`]: sample and score containers, targets and results
//! - [`scores`]: moment and interval-indicator score functions
//! - [`solver`]: Newton solve of the convex dual for general moment targets
//! - [`quantile`]: closed-form tilts for interval-probability targets
//! - [`analytic`]: Poisson and Gaussian closed forms used as oracles
//! - [`diagnostics`]: weights, ESS, resampling, calibration, relaxed tilting,
//!   small-perturbation approximations
//!
//! Per-draw kernels run on rayon when the `parallel` feature is enabled
//! (the default); results are bit-identical with the sequential path.

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod quantile;
pub mod sampling;
pub mod scores;
pub mod solver;
pub mod types;

pub use error::{Result, TiltError};
pub use exec::Execution;
pub use types::{validate_samples, SampleMatrix, ScoreMatrix, TargetMode, TargetSpec, TiltResult};

pub use nalgebra::{DMatrix, DVector};
