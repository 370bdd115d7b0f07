use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tilt_cli::error::CliError;
use tilt_cli::{fixture, oracle, RunConfig};
use tilt_core::sampling::LognormalParams;

/// Entropic tilting of Monte Carlo samples.
///
/// Set TILT_LOG (e.g. `info`, `debug`) for progress output on stderr.
#[derive(Debug, Parser)]
#[command(name = "tilt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tilt a sample file according to a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print tau, cumulant and KL from a closed-form family.
    Oracle {
        #[command(subcommand)]
        family: Family,
    },
    /// Write a seeded bivariate lognormal sample as CSV.
    MakeFixture {
        #[arg(long)]
        seed: u64,
        /// Correlation of the log-scale normal.
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, value_delimiter = ',', num_args = 1, default_values_t = [0.0, 0.0], allow_hyphen_values = true)]
        log_mean: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1, default_values_t = [0.25, 0.25])]
        log_var: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum Family {
    /// Poisson(mu) tilted to mean `target`.
    Poisson {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        target: f64,
    },
    /// Zero-mean unit-variance bivariate normal with correlation `rho`.
    Gaussian {
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        target: Vec<f64>,
    },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error [{}]: {e}", e.code());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TILT_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match tilt_cli::run(&cfg) {
                Ok(outcome) => {
                    if let Some(err) = &outcome.report.error {
                        eprintln!("error [{}]: {}", err.code, err.message);
                    }
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Oracle { family } => {
            let text = match family {
                Family::Poisson { mu, target } => oracle::poisson_report(mu, target),
                Family::Gaussian { rho, target } => oracle::gaussian_report(rho, &target),
            };
            match text {
                Ok(t) => {
                    print!("{t}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e.into()),
            }
        }
        Command::MakeFixture { seed, rho, out, draws, log_mean, log_var } => {
            if log_mean.len() != 2 || log_var.len() != 2 {
                return fail(&CliError::Config("--log-mean and --log-var take two comma-separated values".into()));
            }
            let params = LognormalParams {
                log_mean: [log_mean[0], log_mean[1]],
                log_var: [log_var[0], log_var[1]],
                log_corr: rho,
                draws,
            };
            match fixture::write_fixture(&params, seed, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
    }
}
