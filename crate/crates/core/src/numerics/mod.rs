//! Dense matrix primitives, softmax, dropout masks and Latin hypercube
//! sampling. Everything here is pure given its inputs and the caller's
//! [`RngStream`].

mod matrix;
mod rng;

pub use matrix::Matrix;
pub(crate) use matrix::dot;
pub use rng::RngStream;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

/// Row-wise softmax, stabilized by subtracting each row's maximum.
pub fn softmax_rows(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite("softmax_rows"));
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        softmax_in_place(out.row_mut(i));
    }
    Ok(out)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Bernoulli keep-mask of length `dim`: each entry is 0 with probability
/// `rate` and 1 otherwise. Kept units are not rescaled.
pub fn dropout_mask(dim: usize, rate: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate {rate} outside [0, 1]"
        )));
    }
    Ok((0..dim)
        .map(|_| {
            let u: f64 = rng.random();
            if u < rate {
                0.0
            } else {
                1.0
            }
        })
        .collect())
}

/// Latin hypercube design of `n` points inside the box `[lower, upper]`.
///
/// Every dimension is cut into `n` equal strata; each stratum receives
/// exactly one point, the stratum order is shuffled independently per
/// dimension and the position inside a stratum is uniform.
pub fn latin_hypercube(
    n: usize,
    lower: &[f64],
    upper: &[f64],
    rng: &mut RngStream,
) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("latin hypercube needs n >= 1".into()));
    }
    check_bounds(lower, upper)?;
    let d = lower.len();
    let mut out = Matrix::zeros(n, d);
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(rng);
        let width = upper[j] - lower[j];
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            let x = lower[j] + (s as f64 + u) / n as f64 * width;
            out[(i, j)] = x.min(upper[j]);
        }
    }
    Ok(out)
}

/// Validates a search box: equal lengths, finite, `lower < upper`.
pub fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::shape(
            "bounds",
            format!("lower has {} entries, upper {}", lower.len(), upper.len()),
        ));
    }
    if lower.is_empty() {
        return Err(Error::InvalidArgument("empty bounds".into()));
    }
    for (j, (l, u)) in lower.iter().zip(upper).enumerate() {
        if !(l.is_finite() && u.is_finite() && l < u) {
            return Err(Error::InvalidArgument(format!(
                "degenerate bounds in dimension {j}: [{l}, {u}]"
            )));
        }
    }
    Ok(())
}

/// Per-column mean and (population) standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Standard deviations at or below this fraction of the column scale are
/// treated as zero variance.
const DEGENERATE_STD: f64 = 1e-12;

impl ColumnStats {
    /// Whether column `j` is degenerate, in which case its standardized
    /// values are all zero.
    pub fn is_degenerate(&self, j: usize) -> bool {
        self.std[j] <= DEGENERATE_STD * self.mean[j].abs().max(1.0)
    }
}

/// Z-scores each column (zero mean, unit population variance). Columns with
/// zero variance map to 0.
pub fn standardize_columns(m: &Matrix) -> (Matrix, ColumnStats) {
    let (n, d) = m.shape();
    let mut mean = m.column_sums();
    mean.iter_mut().for_each(|s| *s /= n.max(1) as f64);
    let mut var = vec![0.0; d];
    for row in m.row_iter() {
        for ((v, x), mu) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - mu) * (x - mu);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n.max(1) as f64).sqrt()).collect();
    let stats = ColumnStats { mean, std };
    let mut out = Matrix::zeros(n, d);
    for j in 0..d {
        if stats.is_degenerate(j) {
            continue;
        }
        for i in 0..n {
            out[(i, j)] = (m[(i, j)] - stats.mean[j]) / stats.std[j];
        }
    }
    (out, stats)
}
