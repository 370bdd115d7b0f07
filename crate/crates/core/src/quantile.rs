//! Closed-form tilting under interval-probability (quantile) constraints.
//!
//! With indicator scores the tilted density only depends on the region
//! probabilities, so `tau`, the cumulant and the forward map `tau -> s` are
//! all available in closed form.

use nalgebra::DVector;

use crate::error::{Result, TiltError};
use crate::exec::Execution;
use crate::solver::evaluate_tilt;
use crate::types::{ScoreMatrix, TiltResult};

/// Probabilities of all `q + 1` regions (the untilted tail region last).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProbs {
    probs: Vec<f64>,
}

impl RegionProbs {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(TiltError::InvalidRegionProbs("need at least two regions".into()));
        }
        if let Some(index) = probs.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(TiltError::InvalidRegionProbs(format!("entry {index} is {} (must be > 0)", probs[index])));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(TiltError::InvalidRegionProbs(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// From the `q` constrained interval probabilities; the tail is `1 - sum`.
    pub fn from_interval_probs(probs: &[f64]) -> Result<Self> {
        let mut all = probs.to_vec();
        all.push(1.0 - probs.iter().sum::<f64>());
        Self::new(all)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Number of constrained regions `q`.
    pub fn q(&self) -> usize {
        self.probs.len() - 1
    }

    /// The `q` constrained entries, as a target vector for the solver.
    pub fn constrained(&self) -> Vec<f64> {
        self.probs[..self.q()].to_vec()
    }

    pub fn tail(&self) -> f64 {
        self.probs[self.q()]
    }
}

/// Empirical region probabilities of an indicator score matrix.
pub fn region_probs_from_scores(scores: &ScoreMatrix) -> Result<RegionProbs> {
    if !scores.is_indicator() {
        return Err(TiltError::NotIndicator("entries must be 0/1 with at most one 1 per row".into()));
    }
    let q = scores.num_scores();
    let mut counts = vec![0usize; q + 1];
    for row in scores.rows() {
        let k = row.iter().position(|&v| v == 1.0).unwrap_or(q);
        counts[k] += 1;
    }
    if let Some(index) = counts.iter().position(|&c| c == 0) {
        return Err(TiltError::EmptyRegion { index });
    }
    let n = scores.nrows() as f64;
    Ok(RegionProbs { probs: counts.iter().map(|&c| c as f64 / n).collect() })
}

fn same_len(a: &RegionProbs, b: &RegionProbs) -> Result<()> {
    if a.probs.len() != b.probs.len() {
        return Err(TiltError::DimensionMismatch { expected: a.probs.len(), got: b.probs.len() });
    }
    Ok(())
}

/// `tau_i = log((b_tail * t_i) / (t_tail * b_i))`.
pub fn solve_quantile(baseline: &RegionProbs, target: &RegionProbs) -> Result<DVector<f64>> {
    same_len(baseline, target)?;
    let q = baseline.q();
    let tail = (baseline.tail() / target.tail()).ln();
    Ok(DVector::from_iterator(
        q,
        (0..q).map(|i| (target.probs[i] / baseline.probs[i]).ln() + tail),
    ))
}

/// Tilt an indicator score matrix to the target region probabilities using
/// the closed-form `tau`, with the baseline taken from the same sample.
pub fn tilt_quantile(scores: &ScoreMatrix, target: &RegionProbs) -> Result<TiltResult> {
    let baseline = region_probs_from_scores(scores)?;
    let tau = solve_quantile(&baseline, target)?;
    let t = DVector::from_vec(target.constrained());
    Ok(evaluate_tilt(tau, scores, &t, 0, Execution::default()))
}

/// `c(tau) = log(1 + sum_j b_j (exp(tau_j) - 1))`.
pub fn quantile_cumulant(tau: &DVector<f64>, baseline: &RegionProbs) -> Result<f64> {
    let q = baseline.q();
    if tau.len() != q {
        return Err(TiltError::DimensionMismatch { expected: q, got: tau.len() });
    }
    if tau.iter().any(|t| !t.is_finite()) {
        return Err(TiltError::InvalidArgument("tau must be finite".into()));
    }
    if tau.max() < 700.0 {
        let x: f64 = tau.iter().zip(&baseline.probs).map(|(t, b)| b * t.exp_m1()).sum();
        return Ok(x.ln_1p());
    }
    // log-sum-exp over regions, tail has tau = 0
    let terms: Vec<f64> = tau
        .iter()
        .zip(&baseline.probs)
        .map(|(t, b)| t + b.ln())
        .chain(std::iter::once(baseline.tail().ln()))
        .collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln())
}

/// Region probabilities implied by `tau`: `s_i = b_i exp(tau_i - c(tau))`.
pub fn quantile_forward(tau: &DVector<f64>, baseline: &RegionProbs) -> Result<RegionProbs> {
    let c = quantile_cumulant(tau, baseline)?;
    let mut probs: Vec<f64> = tau.iter().zip(&baseline.probs).map(|(t, b)| b * (t - c).exp()).collect();
    probs.push(baseline.tail() * (-c).exp());
    RegionProbs::new(probs)
}

/// Target putting `1 - epsilon` on region `squeeze_index` and spreading
/// `epsilon` over the other regions in proportion to the baseline.
pub fn almost_deterministic_target(baseline: &RegionProbs, squeeze_index: usize, epsilon: f64) -> Result<RegionProbs> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TiltError::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if squeeze_index >= baseline.probs.len() {
        return Err(TiltError::InvalidArgument(format!(
            "squeeze index {squeeze_index} out of range for {} regions",
            baseline.probs.len()
        )));
    }
    let rest = 1.0 - baseline.probs[squeeze_index];
    let probs = baseline
        .probs
        .iter()
        .enumerate()
        .map(|(k, &b)| if k == squeeze_index { 1.0 - epsilon } else { epsilon * b / rest })
        .collect();
    RegionProbs::new(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::cumulant;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rp(p: &[f64]) -> RegionProbs {
        RegionProbs::new(p.to_vec()).unwrap()
    }

    fn indicator(regions: &[usize], q: usize) -> ScoreMatrix {
        let rows: Vec<Vec<f64>> = regions
            .iter()
            .map(|&k| (0..q).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        ScoreMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn region_probs_from_indicators() {
        let m = indicator(&[0, 1, 2, 3, 0, 1, 2, 3], 3);
        assert_eq!(region_probs_from_scores(&m).unwrap().as_slice(), &[0.25; 4]);
        let m = indicator(&[0, 1, 0, 1], 1);
        assert_eq!(region_probs_from_scores(&m).unwrap().as_slice(), &[0.5, 0.5]);
        let m = indicator(&[0, 2, 0, 2], 2);
        assert_eq!(region_probs_from_scores(&m), Err(TiltError::EmptyRegion { index: 1 }));
        let m = indicator(&[0, 1, 1, 0], 2);
        assert_eq!(region_probs_from_scores(&m), Err(TiltError::EmptyRegion { index: 2 }));
        let not = ScoreMatrix::from_columns(&[vec![0.5, 1.0]]).unwrap();
        assert!(matches!(region_probs_from_scores(&not), Err(TiltError::NotIndicator(_))));
    }

    #[test]
    fn region_probs_validation() {
        assert!(RegionProbs::new(vec![0.5, 0.6]).is_err());
        assert!(RegionProbs::new(vec![1.0, 0.0]).is_err());
        assert!(RegionProbs::new(vec![1.0]).is_err());
        let r = RegionProbs::from_interval_probs(&[0.2, 0.3]).unwrap();
        assert_relative_eq!(r.tail(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn solve_closed_form() {
        let b = rp(&[0.3, 0.3, 0.3, 0.1]);
        assert_eq!(solve_quantile(&b, &b).unwrap(), DVector::zeros(3));
        let tau = solve_quantile(&b, &rp(&[0.25; 4])).unwrap();
        for t in tau.iter() {
            assert_relative_eq!(*t, (1.0f64 / 3.0).ln(), epsilon = 1e-15);
            assert_relative_eq!(*t, -1.09861, epsilon = 1e-5);
        }
        assert!(solve_quantile(&b, &rp(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn cumulant_closed_form() {
        let b = rp(&[0.5, 0.5]);
        assert_eq!(quantile_cumulant(&DVector::zeros(1), &b).unwrap(), 0.0);
        let tau = DVector::from_element(1, 2f64.ln());
        assert_relative_eq!(quantile_cumulant(&tau, &b).unwrap(), 1.5f64.ln(), epsilon = 1e-15);
        let s = quantile_forward(&tau, &b).unwrap();
        assert_relative_eq!(s.as_slice()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.tail(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn cumulant_large_tau_branch() {
        let b = rp(&[0.25, 0.75]);
        let c = quantile_cumulant(&DVector::from_element(1, 800.0), &b).unwrap();
        assert_relative_eq!(c, 800.0 + 0.25f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn cumulant_matches_sample_cumulant() {
        let regions: Vec<usize> = (0..997).map(|i| (i * 7 + i / 13) % 4).collect();
        let m = indicator(&regions, 3);
        let b = region_probs_from_scores(&m).unwrap();
        for tau in [vec![0.3, -1.2, 2.0], vec![-4.0, 0.0, 0.7], vec![0.0; 3]] {
            let tau = DVector::from_vec(tau);
            let closed = quantile_cumulant(&tau, &b).unwrap();
            assert!((closed - cumulant(&tau, &m)).abs() <= 1e-12);
        }
    }

    #[test]
    fn forward_at_zero_is_identity() {
        let b = rp(&[0.1, 0.2, 0.3, 0.4]);
        let s = quantile_forward(&DVector::zeros(3), &b).unwrap();
        for (x, y) in s.as_slice().iter().zip(b.as_slice()) {
            assert_relative_eq!(x, y, epsilon = 1e-16);
        }
    }

    #[test]
    fn sample_tilt_hits_targets_exactly() {
        let regions: Vec<usize> = (0..1000).map(|i| if i < 700 { i % 5 } else { i % 2 }).collect();
        let m = indicator(&regions, 4);
        let target = rp(&[0.1, 0.3, 0.2, 0.15, 0.25]);
        let r = tilt_quantile(&m, &target).unwrap();
        for (a, t) in r.achieved_mean.iter().zip(target.as_slice()) {
            assert!((a - t).abs() <= 1e-12, "{a} vs {t}");
        }
        r.check_invariants(&DVector::from_vec(target.constrained())).unwrap();
        assert!(r.kl > 0.0);
    }

    #[test]
    fn almost_deterministic() {
        let b = rp(&[0.25; 4]);
        let t = almost_deterministic_target(&b, 1, 0.01).unwrap();
        assert_relative_eq!(t.as_slice()[1], 0.99, epsilon = 1e-15);
        for k in [0, 2, 3] {
            assert_relative_eq!(t.as_slice()[k], 0.01 / 3.0, epsilon = 1e-15);
        }
        let b = rp(&[0.1, 0.6, 0.3]);
        let t = almost_deterministic_target(&b, 1, 0.4).unwrap();
        for (x, y) in t.as_slice().iter().zip(b.as_slice()) {
            assert_relative_eq!(x, y, epsilon = 1e-15);
        }
        assert!(almost_deterministic_target(&b, 3, 0.1).is_err());
        assert!(almost_deterministic_target(&b, 0, 1.0).is_err());
        assert!(almost_deterministic_target(&b, 0, 0.0).is_err());
    }

    fn simplex(k: usize) -> impl Strategy<Value = RegionProbs> {
        proptest::collection::vec(0.05f64..1.0, k).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let head: f64 = p[..p.len() - 1].iter().sum();
            *p.last_mut().unwrap() = 1.0 - head;
            RegionProbs::new(p).unwrap()
        })
    }

    proptest! {
        #[test]
        fn forward_inverts_solve((b, t) in (2usize..11).prop_flat_map(|k| (simplex(k), simplex(k)))) {
            let tau = solve_quantile(&b, &t).unwrap();
            let back = quantile_forward(&tau, &b).unwrap();
            for (x, y) in back.as_slice().iter().zip(t.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            }
        }

        #[test]
        fn forward_sign_structure(
            (b, tau) in (2usize..8).prop_flat_map(|k| (simplex(k), proptest::collection::vec(-2.0f64..2.0, k - 1)))
        ) {
            let tau = DVector::from_vec(tau);
            let base = quantile_forward(&tau, &b).unwrap();
            let h = 1e-6;
            for i in 0..tau.len() {
                let mut up = tau.clone();
                up[i] += h;
                let moved = quantile_forward(&up, &b).unwrap();
                for j in 0..tau.len() {
                    let d = moved.as_slice()[j] - base.as_slice()[j];
                    if i == j { prop_assert!(d > 0.0); } else { prop_assert!(d < 0.0); }
                }
            }
        }
    }
}
