//! `tilt run`: solve, then write the report and plot-data files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tilt_core::diagnostics::{calibrate_bayes_factor, resample, WeightVector};
use tilt_core::quantile::{tilt_quantile, RegionProbs};
use tilt_core::scores::{
    baseline_expected_scores, eval_functional, eval_moment_scores, eval_quantile_scores, MomentScoreSpec,
    QuantileConstraint,
};
use tilt_core::solver::solve_moment;
use tilt_core::{diagnostics, SampleMatrix, TargetMode, TargetSpec, TiltResult};

use crate::config::{Constraint, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, write_weights_csv};
use crate::report::{ConstraintSummary, ErrorInfo, RunReport, TableRow, TiltSummary};
use crate::shift::resolve_relative_shift;

/// Report plus the process exit code (0 converged, 2 domain or solver error).
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
}

struct Solved {
    result: TiltResult,
    table: Vec<TableRow>,
}

fn summary(cfg: &RunConfig, cutpoints: Option<Vec<f64>>) -> ConstraintSummary {
    let mode = match &cfg.constraint {
        Constraint::Moment { mode: TargetMode::Exact, .. } => Some("exact".to_string()),
        Constraint::Moment { mode: TargetMode::LowerBound, .. } => Some("lower-bound".to_string()),
        _ => None,
    };
    ConstraintSummary {
        kind: cfg.constraint.kind().into(),
        functionals: cfg.constraint.functionals().iter().map(|f| f.label()).collect(),
        mode,
        cutpoints,
    }
}

fn interval_name(label: &str, cutpoints: &[f64], k: usize) -> String {
    let lo = if k == 0 { "-inf".to_string() } else { cutpoints[k - 1].to_string() };
    let hi = if k == cutpoints.len() { "inf".to_string() } else { cutpoints[k].to_string() };
    if k == cutpoints.len() {
        format!("{label} in ({lo}, {hi})")
    } else {
        format!("{label} in ({lo}, {hi}]")
    }
}

fn solve_quantile_constraint(samples: &SampleMatrix, qc: &QuantileConstraint) -> tilt_core::Result<Solved> {
    let scores = eval_quantile_scores(qc, samples)?;
    let target = RegionProbs::new(qc.region_probs())?;
    let result = tilt_quantile(&scores, &target)?;
    let baseline = tilt_core::quantile::region_probs_from_scores(&scores)?;
    let label = qc.functional().label();
    let q = qc.cutpoints().len();
    let achieved_tail = 1.0 - result.achieved_mean.sum();
    let table = (0..=q)
        .map(|k| TableRow {
            name: interval_name(&label, qc.cutpoints(), k),
            baseline: baseline.as_slice()[k],
            target: target.as_slice()[k],
            achieved: if k < q { result.achieved_mean[k] } else { achieved_tail },
        })
        .collect();
    Ok(Solved { result, table })
}

fn solve(cfg: &RunConfig, samples: &SampleMatrix) -> Result<(Solved, Option<Vec<f64>>)> {
    match &cfg.constraint {
        Constraint::Moment { functionals, targets, mode } => {
            let spec = MomentScoreSpec::new(functionals.clone())?;
            let scores = eval_moment_scores(&spec, samples)?;
            let target = TargetSpec::new(targets.clone(), *mode)?;
            let result = match mode {
                TargetMode::Exact => solve_moment(&scores, &target, &cfg.solver)?,
                TargetMode::LowerBound => diagnostics::ret_solve(&scores, &target, &cfg.solver)?,
            };
            let base = baseline_expected_scores(&scores);
            let table = functionals
                .iter()
                .enumerate()
                .map(|(j, f)| TableRow {
                    name: f.label(),
                    baseline: base[j],
                    target: targets[j],
                    achieved: result.achieved_mean[j],
                })
                .collect();
            Ok((Solved { result, table }, None))
        }
        Constraint::Quantile { functional, cutpoints, probs } => {
            let qc = QuantileConstraint::new(functional.clone(), cutpoints.clone(), probs.clone())?;
            Ok((solve_quantile_constraint(samples, &qc)?, Some(cutpoints.clone())))
        }
        Constraint::RelativeShift { functional, levels, shifts } => {
            let qc = resolve_relative_shift(samples, functional, levels, shifts)?;
            let cut = qc.cutpoints().to_vec();
            Ok((solve_quantile_constraint(samples, &qc)?, Some(cut)))
        }
    }
}

/// Run a config. `Err` means an I/O or configuration failure (exit code 1);
/// domain and solver errors are reported in the returned outcome.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let samples = ingest_csv(&cfg.samples_path)?;
    info!("read {} draws of dimension {}", samples.draws(), samples.dim());
    std::fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(&cfg.output_dir))?;
    let report_path = cfg.output_dir.join("report.json");

    let (solved, cutpoints) = match solve(cfg, &samples) {
        Ok(s) => s,
        Err(e) if e.exit_code() == 2 => {
            warn!("run failed: {} ({})", e, e.code());
            let report = RunReport {
                status: "error".into(),
                error: Some(ErrorInfo { code: e.code().into(), message: e.to_string() }),
                constraint: summary(cfg, None),
                draws: samples.draws(),
                seed: cfg.seed,
                result: None,
                elapsed: start.elapsed(),
            };
            report.write(&report_path)?;
            return Ok(RunOutcome { report, exit_code: 2 });
        }
        Err(e) => return Err(e),
    };

    let r = &solved.result;
    let weights = WeightVector::new(r.weights.clone())?;
    write_weights_csv(&cfg.output_dir.join("weights.csv"), weights.as_slice())?;
    if let Some(n) = cfg.resample_n {
        let draws = resample(&weights, &samples, n, cfg.seed)?;
        write_samples(&cfg.output_dir.join("resampled.csv"), &draws)?;
    }
    write_plot_data(cfg, &samples, weights.as_slice())?;

    let report = RunReport {
        status: if r.converged { "converged" } else { "not_converged" }.into(),
        error: None,
        constraint: summary(cfg, cutpoints),
        draws: samples.draws(),
        seed: cfg.seed,
        result: Some(TiltSummary {
            tau: r.tau.iter().copied().collect(),
            cumulant: r.cumulant,
            kl: r.kl,
            calibrated_probability: calibrate_bayes_factor(r.kl),
            ess: r.ess,
            ess_fraction: r.ess_fraction(),
            iterations: r.iterations,
            converged: r.converged,
            table: solved.table,
        }),
        elapsed: start.elapsed(),
    };
    report.write(&report_path)?;
    info!("kl {:.6}, ess fraction {:.4}, {:?}", r.kl, r.ess_fraction(), report.elapsed);
    let exit_code = if report.converged() { 0 } else { 2 };
    Ok(RunOutcome { report, exit_code })
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(CliError::io(path))
}

fn column_header(m: usize) -> String {
    (1..=m).map(|j| format!("y{j}")).collect::<Vec<_>>().join(",")
}

fn write_samples(path: &Path, samples: &SampleMatrix) -> Result<()> {
    let mut body = column_header(samples.dim());
    body.push('\n');
    for row in samples.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        body.push_str(&line.join(","));
        body.push('\n');
    }
    write_text(path, &body)
}

/// Equal-width bins over `[min, max]` with baseline and tilted mass.
pub fn histogram(values: &[f64], weights: &[f64], bins: usize) -> Vec<(f64, f64, f64, f64)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut base = vec![0usize; bins];
    let mut tilted = vec![0.0; bins];
    for (v, w) in values.iter().zip(weights) {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        base[k] += 1;
        tilted[k] += w;
    }
    let n = values.len() as f64;
    (0..bins)
        .map(|k| {
            let edge = |k: usize| if k == bins { hi.max(lo + width * bins as f64) } else { lo + width * k as f64 };
            (edge(k), edge(k + 1), base[k] as f64 / n, tilted[k])
        })
        .collect()
}

fn write_histogram(path: &Path, values: &[f64], weights: &[f64], bins: usize) -> Result<()> {
    let mut body = String::from("bin_lo,bin_hi,baseline_prob,tilted_prob\n");
    for (a, b, p, q) in histogram(values, weights, bins) {
        writeln!(body, "{a},{b},{p},{q}").expect("string write");
    }
    write_text(path, &body)
}

fn write_plot_data(cfg: &RunConfig, samples: &SampleMatrix, weights: &[f64]) -> Result<()> {
    let functionals = cfg.constraint.functionals();
    let mut phis = Vec::with_capacity(functionals.len());
    for (k, f) in functionals.iter().enumerate() {
        let values = eval_functional(f, samples)?;
        let name = format!("hist_phi{}_{}.csv", k + 1, f.label());
        write_histogram(&cfg.output_dir.join(name), &values, weights, cfg.histogram_bins)?;
        phis.push(values);
    }
    for j in 0..samples.dim() {
        let name = format!("hist_margin_y{}.csv", j + 1);
        write_histogram(&cfg.output_dir.join(name), &samples.column(j), weights, cfg.histogram_bins)?;
    }

    // Scatter of scaled weights W = I w against the coordinates, on a seeded subsample.
    let n = samples.draws();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, cfg.scatter_n.min(n)).into_vec();
    idx.sort_unstable();
    let mut body = format!("index,{}", column_header(samples.dim()));
    for (k, f) in functionals.iter().enumerate() {
        write!(body, ",phi{}_{}", k + 1, f.label()).expect("string write");
    }
    body.push_str(",scaled_weight\n");
    for i in idx {
        write!(body, "{i}").expect("string write");
        for v in samples.row(i) {
            write!(body, ",{v}").expect("string write");
        }
        for phi in &phis {
            write!(body, ",{}", phi[i]).expect("string write");
        }
        writeln!(body, ",{}", n as f64 * weights[i]).expect("string write");
    }
    write_text(&cfg.output_dir.join("scatter.csv"), &body)
}
