//! Number formatting and JSON matrix helpers shared by reports and the CLI.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Significant digits used for every reported real.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text for `x` rounded to 12 significant digits; exponent notation
/// only for very small or very large magnitudes.
pub fn format_real(x: f64) -> String {
    let y = round_sig(x);
    if y == 0.0 {
        return "0".to_string();
    }
    let mag = y.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{y}")
    } else {
        format!("{y:e}")
    }
}

/// Row-major `[[[re, im], ...], ...]` → matrix.
pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        return Err(Error::Parse("matrix must be nonempty".into()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
        return Err(Error::Parse(format!("row {i} has length {}, expected {n_cols}", r.len())));
    }
    let data = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    CMatrix::from_vec(n_rows, n_cols, data)
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|z| [round_sig(z.re), round_sig(z.im)]).collect())
        .collect()
}

pub fn vector_to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [round_sig(z.re), round_sig(z.im)]).collect()
}
