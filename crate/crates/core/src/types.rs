//! Sample and score containers, targets and solver results.
//!
//! Matrices are stored row-major by draw: row `i` holds draw `y_i` (or its
//! score vector `s(y_i)`), which is the layout every weight kernel streams
//! over.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TiltError};

macro_rules! row_major_matrix {
    ($name:ident) => {
        impl $name {
            /// Number of draws.
            pub fn nrows(&self) -> usize {
                self.rows
            }

            pub fn ncols(&self) -> usize {
                self.cols
            }

            pub fn row(&self, i: usize) -> &[f64] {
                &self.data[i * self.cols..(i + 1) * self.cols]
            }

            pub fn get(&self, i: usize, j: usize) -> f64 {
                self.data[i * self.cols + j]
            }

            pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
                self.data.chunks_exact(self.cols)
            }

            pub fn column(&self, j: usize) -> Vec<f64> {
                self.rows().map(|r| r[j]).collect()
            }

            /// Flat row-major storage.
            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }
        }
    };
}

fn check_shape(data: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || data.is_empty() {
        return Err(TiltError::Empty);
    }
    if data.len() != rows * cols {
        return Err(TiltError::DimensionMismatch { expected: rows * cols, got: data.len() });
    }
    if let Some(k) = data.iter().position(|x| !x.is_finite()) {
        return Err(TiltError::NonFinite { row: k / cols, col: k % cols });
    }
    Ok(())
}

fn flatten_rows(rows: &[Vec<f64>]) -> Result<(Vec<f64>, usize, usize)> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(rows.len() * cols);
    for r in rows {
        if r.len() != cols {
            return Err(TiltError::DimensionMismatch { expected: cols, got: r.len() });
        }
        data.extend_from_slice(r);
    }
    Ok((data, rows.len(), cols))
}

/// Baseline Monte Carlo sample: `I` draws of an `m`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

row_major_matrix!(SampleMatrix);

impl SampleMatrix {
    /// Validate row-major data of shape `rows × cols`.
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        check_shape(&data, rows, cols)?;
        if rows < 2 {
            return Err(TiltError::TooFewDraws(rows));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(TiltError::Empty);
        }
        let (data, r, c) = flatten_rows(rows)?;
        Self::new(data, r, c)
    }

    /// Draw count `I`.
    pub fn draws(&self) -> usize {
        self.rows
    }

    /// Dimension `m`.
    pub fn dim(&self) -> usize {
        self.cols
    }

    /// Gather the given rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        check_shape(&data, idx.len(), self.cols)?;
        Ok(Self { data, rows: idx.len(), cols: self.cols })
    }
}

/// Validate a raw matrix of draws.
pub fn validate_samples(raw: &[Vec<f64>]) -> Result<SampleMatrix> {
    SampleMatrix::from_rows(raw)
}

/// Score functions evaluated on a sample: `I × q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

row_major_matrix!(ScoreMatrix);

impl ScoreMatrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        check_shape(&data, rows, cols)?;
        Ok(Self { data, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(TiltError::Empty);
        }
        let (data, r, c) = flatten_rows(rows)?;
        Self::new(data, r, c)
    }

    /// Build from columns of equal length.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let q = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        if q == 0 || n == 0 {
            return Err(TiltError::Empty);
        }
        let mut data = vec![0.0; n * q];
        for (j, c) in cols.iter().enumerate() {
            if c.len() != n {
                return Err(TiltError::DimensionMismatch { expected: n, got: c.len() });
            }
            for (i, &v) in c.iter().enumerate() {
                data[i * q + j] = v;
            }
        }
        Self::new(data, n, q)
    }

    /// Number of score functions `q`.
    pub fn num_scores(&self) -> usize {
        self.cols
    }

    /// True when every entry is 0 or 1 and every row has at most one 1.
    pub fn is_indicator(&self) -> bool {
        self.rows().all(|r| {
            r.iter().all(|&v| v == 0.0 || v == 1.0) && r.iter().sum::<f64>() <= 1.0
        })
    }

    /// Keep only the listed columns.
    pub fn select_columns(&self, keep: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for r in self.rows() {
            data.extend(keep.iter().map(|&j| r[j]));
        }
        Self::new(data, self.rows, keep.len())
    }
}

/// How a target vector constrains the tilted expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// `E_f s(y) = s`.
    Exact,
    /// `E_f s(y) >= s` elementwise.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub target: DVector<f64>,
    pub mode: TargetMode,
}

impl TargetSpec {
    pub fn new(target: Vec<f64>, mode: TargetMode) -> Result<Self> {
        if target.is_empty() {
            return Err(TiltError::Empty);
        }
        if let Some(k) = target.iter().position(|x| !x.is_finite()) {
            return Err(TiltError::NonFinite { row: 0, col: k });
        }
        Ok(Self { target: DVector::from_vec(target), mode })
    }

    pub fn exact(target: Vec<f64>) -> Result<Self> {
        Self::new(target, TargetMode::Exact)
    }

    pub fn lower_bound(target: Vec<f64>) -> Result<Self> {
        Self::new(target, TargetMode::LowerBound)
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }
}

/// Output of a tilting solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltResult {
    /// Tilting vector.
    pub tau: DVector<f64>,
    /// Log-normalizer `c(tau) = log mean_i exp(tau . s(y_i))`.
    pub cumulant: f64,
    /// Minimized divergence `tau . s - c(tau)`.
    pub kl: f64,
    /// Normalized importance weights.
    pub weights: Vec<f64>,
    pub ess: f64,
    pub achieved_mean: DVector<f64>,
    pub achieved_cov: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl TiltResult {
    pub fn ess_fraction(&self) -> f64 {
        self.ess / self.weights.len() as f64
    }

    /// Check the result's internal invariants against the target it solved
    /// for. Returns a description of the first violation.
    pub fn check_invariants(&self, target: &DVector<f64>) -> std::result::Result<(), String> {
        let n = self.weights.len() as f64;
        if self.weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err("weights must be finite and nonnegative".into());
        }
        let sum: f64 = self.weights.iter().copied().collect::<crate::exec::CompensatedSum>().value();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("weights sum to {sum}"));
        }
        let sq: f64 = self.weights.iter().map(|w| w * w).collect::<crate::exec::CompensatedSum>().value();
        let ess = 1.0 / sq;
        if ((self.ess - ess) / ess).abs() > 1e-12 {
            return Err(format!("ess {} does not match 1/sum w^2 = {ess}", self.ess));
        }
        if self.ess < 1.0 - 1e-9 || self.ess > n * (1.0 + 1e-12) {
            return Err(format!("ess {} outside [1, {n}]", self.ess));
        }
        if self.converged {
            let kl = self.tau.dot(target) - self.cumulant;
            if (kl - self.kl).abs() > 1e-12 * (1.0 + kl.abs()) {
                return Err(format!("kl {} differs from tau.s - c = {kl}", self.kl));
            }
            if self.kl < -1e-12 {
                return Err(format!("negative kl {}", self.kl));
            }
        }
        let cov = &self.achieved_cov;
        if cov.nrows() != cov.ncols() || cov.nrows() != self.tau.len() {
            return Err("covariance shape mismatch".into());
        }
        if (cov - cov.transpose()).amax() > 0.0 {
            return Err("covariance not symmetric".into());
        }
        let scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(format!("covariance has negative eigenvalue {min_eig}"));
        }
        Ok(())
    }
}
