//! Seeded lognormal sample files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tilt_core::sampling::{lognormal_fixture, LognormalParams};

use crate::error::{CliError, Result};

pub fn header(params: &LognormalParams, seed: u64) -> String {
    format!(
        "# lognormal fixture seed={seed} draws={} log_mean={},{} log_var={},{} log_corr={}\n",
        params.draws, params.log_mean[0], params.log_mean[1], params.log_var[0], params.log_var[1], params.log_corr
    )
}

pub fn write_fixture(params: &LognormalParams, seed: u64, out: &Path) -> Result<()> {
    let samples = lognormal_fixture(params, seed)?;
    let mut body = header(params, seed);
    body.push_str("y1,y2\n");
    for r in samples.rows() {
        body.push_str(&format!("{},{}\n", r[0], r[1]));
    }
    let file = File::create(out).map_err(CliError::io(out))?;
    let mut w = BufWriter::new(file);
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(CliError::io(out))
}
