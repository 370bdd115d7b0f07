//! Execution strategy for per-draw kernels.
//!
//! Work over draws is split into fixed-size chunks. Each chunk is reduced
//! sequentially, and chunk partials are always combined in chunk order, so
//! the parallel and sequential paths produce bit-identical results
//! regardless of thread count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Draws per reduction chunk.
pub const CHUNK_LEN: usize = 4096;

/// How per-draw work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Single-threaded evaluation.
    Sequential,
    /// Rayon data-parallel evaluation. Falls back to sequential when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

fn chunk_ranges(n: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    (0..n.div_ceil(CHUNK_LEN)).map(move |c| c * CHUNK_LEN..((c + 1) * CHUNK_LEN).min(n))
}

/// Map each chunk of `0..n` to a partial result, returned in chunk order.
pub(crate) fn map_chunks<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        let ranges: Vec<_> = chunk_ranges(n).collect();
        return ranges.into_par_iter().map(f).collect();
    }
    let _ = exec;
    chunk_ranges(n).map(f).collect()
}

/// Fill `out[i] = f(i)` for every index.
pub(crate) fn fill_indexed<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(CHUNK_LEN)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * CHUNK_LEN;
                for (k, v) in chunk.iter_mut().enumerate() {
                    *v = f(base + k);
                }
            });
        return;
    }
    let _ = exec;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Fold another accumulator into this one.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a slice, deterministic under either execution mode.
pub fn compensated_sum(exec: Execution, xs: &[f64]) -> f64 {
    let parts = map_chunks(exec, xs.len(), |r| xs[r].iter().copied().collect::<CompensatedSum>());
    let mut acc = CompensatedSum::new();
    for p in &parts {
        acc.merge(p);
    }
    acc.value()
}
