//! CSV input and the weights CSV round trip.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use tilt_core::diagnostics::WeightVector;
use tilt_core::SampleMatrix;

use crate::error::{CliError, Result};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn csv_error(e: csv::Error) -> CliError {
    let row = e.position().map_or(0, |p| p.line());
    CliError::Parse { row, col: 0, msg: e.to_string() }
}

/// Parse a numeric CSV: `'#'` lines are comments, and a first row with no
/// numeric field is a header.
pub fn parse_csv<R: Read>(input: R) -> Result<SampleMatrix> {
    let mut rdr = reader(input);
    let mut data = Vec::new();
    let mut rows = 0usize;
    let mut cols = 0usize;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        if k == 0 && rec.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rows == 0 {
            cols = rec.len();
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| CliError::Parse {
                row: line,
                col: j + 1,
                msg: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::NonFinite { row: line, col: j + 1 });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 || cols == 0 {
        return Err(CliError::Empty);
    }
    Ok(SampleMatrix::new(data, rows, cols)?)
}

pub fn ingest_csv(path: &Path) -> Result<SampleMatrix> {
    let file = File::open(path).map_err(CliError::io(path))?;
    parse_csv(file)
}

/// Write `index,weight` rows. Floats use the shortest round-trip form.
pub fn write_weights_csv(path: &Path, weights: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut out = BufWriter::new(file);
    let mut body = String::from("index,weight\n");
    for (i, w) in weights.iter().enumerate() {
        body.push_str(&format!("{i},{w}\n"));
    }
    out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(CliError::io(path))
}

pub fn read_weights_csv(path: &Path) -> Result<WeightVector> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut rdr = reader(file);
    let mut w = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if k == 0 && rec.get(0) == Some("index") {
            continue;
        }
        let line = k as u64 + 1;
        let field = rec.get(1).ok_or(CliError::Parse { row: line, col: 2, msg: "missing weight".into() })?;
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::Parse { row: line, col: 2, msg: format!("cannot parse {field:?}") })?;
        w.push(v);
    }
    Ok(WeightVector::new(w)?)
}
