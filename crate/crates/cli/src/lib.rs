//! Command-line front end: CSV ingestion, TOML run configs, relative-shift
//! quantile constraints, and the report and plot-data writers behind the
//! `tilt` binary.

pub mod config;
pub mod error;
pub mod fixture;
pub mod ingest;
pub mod oracle;
pub mod report;
pub mod run;
pub mod shift;

pub use config::{Constraint, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, RunOutcome};
