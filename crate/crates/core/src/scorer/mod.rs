//! Next-token scorers.
//!
//! A scorer maps a batch of histories (each starting with BOS) to one row of
//! log-probabilities per history, with one column per vocabulary id. The BOS
//! column is always `-inf`; every other id belongs to the target vocabulary.

mod callback;
mod ngram;
mod synthetic;
mod table;
mod uniform;

pub use callback::{CallbackScorer, CALLBACK_NORMALIZATION_TOL};
pub use ngram::{NGramLm, DEFAULT_ALPHA, DEFAULT_ORDER};
pub use synthetic::SyntheticScorer;
pub use table::{TableScorer, SOURCE_SEPARATOR};
pub use uniform::UniformScorer;

use crate::error::{Error, Result};
use crate::TokenId;

/// Row-major `rows x cols` matrix of log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Scorer(format!(
                "matrix of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::ScoreShape {
                    expected: cols,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Self::new(n, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: TokenId) -> f64 {
        self.values[row * self.cols + col as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks every row is a log-distribution to within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for i in 0..self.rows {
            let row = self.row(i);
            if let Some(v) = row.iter().find(|v| v.is_nan() || **v > 0.0) {
                return Err(Error::Scorer(format!("row {i} has invalid log-probability {v}")));
            }
            let lse = log_sum_exp(row);
            if lse.is_nan() || lse.abs() > tol {
                return Err(Error::Scorer(format!(
                    "row {i} is not normalized (log-sum-exp {lse:e})"
                )));
            }
        }
        Ok(())
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// In-place log-softmax over the entries of `row` other than `skip`, which is
/// set to `-inf`.
pub(crate) fn log_softmax_excluding(row: &mut [f64], skip: usize) {
    row[skip] = f64::NEG_INFINITY;
    let lse = log_sum_exp(row);
    for v in row.iter_mut() {
        *v -= lse;
    }
}

/// Next-token scoring contract.
///
/// Implementations must be deterministic and score each row from its own
/// history only.
pub trait Scorer {
    /// Number of columns: the full vocabulary size, BOS included.
    fn vocab_size(&self) -> usize;

    fn step(&self, histories: &[&[TokenId]], source: Option<&str>) -> Result<ScoreMatrix>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn step(&self, histories: &[&[TokenId]], source: Option<&str>) -> Result<ScoreMatrix> {
        (**self).step(histories, source)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn step(&self, histories: &[&[TokenId]], source: Option<&str>) -> Result<ScoreMatrix> {
        (**self).step(histories, source)
    }
}

/// Validates the shared preconditions of [`Scorer::step`].
pub(crate) fn check_histories(
    histories: &[&[TokenId]],
    bos: TokenId,
    eos: TokenId,
    vocab_size: usize,
) -> Result<()> {
    if histories.is_empty() {
        return Err(Error::Scorer("no histories to score".into()));
    }
    for (i, h) in histories.iter().enumerate() {
        if h.first() != Some(&bos) {
            return Err(Error::Scorer(format!("history {i} does not start with BOS")));
        }
        if let Some(pos) = h.iter().position(|&t| t == eos) {
            return Err(Error::Scorer(format!(
                "history {i} contains EOS at position {pos}"
            )));
        }
        if let Some(&t) = h.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::TokenOutOfRange { id: t, size: vocab_size });
        }
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_basics() {
        assert!((log_sum_exp(&[0.5f64.ln(), 0.5f64.ln()])).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn normalization_check_rejects_bad_rows() {
        let m = ScoreMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(m.check_normalized(1e-6).is_err());
        let m = ScoreMatrix::new(1, 2, vec![f64::NEG_INFINITY, 0.0]).unwrap();
        m.check_normalized(1e-6).unwrap();
        assert!(ScoreMatrix::from_rows(vec![vec![0.0]], 2).is_err());
    }
}
