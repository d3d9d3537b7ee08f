//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of dimension at most a few dozen, so the
//! routines favour accuracy and determinism over speed: Hermitian
//! eigendecomposition uses cyclic two-sided Jacobi rotations and the singular
//! value decomposition uses one-sided (Hestenes) Jacobi.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hermiticity / reconstruction tolerance.
pub const HERM_TOL: f64 = 1e-10;
/// Probabilities at or below this are treated as zero.
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance for comparing entropies.
pub const ENTROPY_TOL: f64 = 1e-9;
/// Negative eigenvalues down to `-NEG_EIG_TOL` are clamped to zero.
pub const NEG_EIG_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix contains non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[C64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(r, k)] * other[(k, r)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Entrywise max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |M - M†|`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `max |M†M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&CMatrix::identity(self.rows))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        CMatrix::from_fn(rows, cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "incompatible shapes for matrix product");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Real eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted descending; equal eigenvalues keep the order in
/// which they appear on the converged diagonal.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let scale = m.max_abs().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > HERM_TOL * scale {
        return Err(Error::NotHermitian { defect });
    }
    let n = m.rows;
    // symmetrize so round-off in the input does not leak into the result
    let mut a = CMatrix::from_fn(n, n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)].norm_sqr())
            .sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)].re.powi(2)).sum();
        if off <= (f64::EPSILON * f64::EPSILON) * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { routine: "hermitian_eig", sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.partial_cmp(&a[(x, x)].re).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Annihilate `a[p][q]` with a complex Jacobi rotation `J`: `a ← J† a J`, `v ← v J`.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // phase that makes the (p, q) element real and positive
    let ph = (apq / mag).conj();
    // J restricted to (p, q): [[c, s], [-s·ph, c·ph]]
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -ph * s;
    let jqq = ph * c;
    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Thin singular value decomposition `m = U · diag(s) · V†`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: CMatrix,
    /// Non-negative, descending.
    pub singular_values: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let s: Vec<f64> = self.singular_values.clone();
        let us = CMatrix::from_fn(self.u.rows, s.len(), |r, c| self.u[(r, c)] * s[c]);
        &us * &self.v.adjoint()
    }
}

/// One-sided Jacobi SVD.
pub fn svd(m: &CMatrix) -> Result<Svd> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::DimensionMismatch("svd of an empty matrix".into()));
    }
    if m.rows < m.cols {
        let t = svd_tall(&m.adjoint())?;
        return Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u });
    }
    svd_tall(m)
}

fn svd_tall(m: &CMatrix) -> Result<Svd> {
    let (rows, cols) = (m.rows, m.cols);
    // work column-wise: cols[k] is column k of A·V
    let mut work: Vec<Vec<C64>> = (0..cols).map(|c| m.column(c)).collect();
    let mut v = CMatrix::identity(cols);

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let alpha = norm_sqr(&work[p]);
                let beta = norm_sqr(&work[q]);
                let gamma = inner(&work[p], &work[q]);
                let mag = gamma.norm();
                if mag == 0.0 || mag <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph = (gamma / mag).conj();
                let jqp = -ph * s;
                let jqq = ph * c;
                for r in 0..rows {
                    let xp = work[p][r];
                    let xq = work[q][r];
                    work[p][r] = xp * c + xq * jqp;
                    work[q][r] = xp * s + xq * jqq;
                }
                for r in 0..cols {
                    let xp = v[(r, p)];
                    let xq = v[(r, q)];
                    v[(r, p)] = xp * c + xq * jqp;
                    v[(r, q)] = xp * s + xq * jqq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { routine: "svd", sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = work.iter().map(|w| norm_sqr(w).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));

    let largest = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = largest * (rows.max(cols) as f64) * f64::EPSILON;
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut singular_values = Vec::with_capacity(cols);
    let mut null: Vec<usize> = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        singular_values.push(norms[k]);
        if norms[k] > cutoff && norms[k] > 0.0 {
            u_cols.push(work[k].iter().map(|z| z / norms[k]).collect());
        } else {
            u_cols.push(vec![ZERO; rows]);
            null.push(slot);
        }
    }
    // complete U for (numerically) zero singular values
    for slot in null {
        let mut filled = false;
        for e in 0..rows {
            let mut cand = vec![ZERO; rows];
            cand[e] = ONE;
            for (other, col) in u_cols.iter().enumerate() {
                if other == slot {
                    continue;
                }
                let proj = inner(col, &cand);
                for (x, y) in cand.iter_mut().zip(col) {
                    *x -= proj * y;
                }
            }
            let nrm = norm_sqr(&cand).sqrt();
            if nrm > 1e-6 {
                u_cols[slot] = cand.into_iter().map(|z| z / nrm).collect();
                filled = true;
                break;
            }
        }
        debug_assert!(filled);
    }
    let u = CMatrix::from_fn(rows, cols, |r, c| u_cols[c][r]);
    let v = CMatrix::from_fn(cols, cols, |r, c| v[(r, order[c])]);
    Ok(Svd { u, singular_values, v })
}

/// Von Neumann entropy in bits of a spectrum: `-Σ λ log₂ λ` with `0·log₂0 = 0`.
///
/// Values in `[-NEG_EIG_TOL, 0]` are clamped to zero.
pub fn xlog2x_spectrum(eigs: &[f64]) -> Result<f64> {
    // fixed summation order makes the result independent of input order
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for &lambda in &sorted {
        if lambda.is_nan() || lambda < -NEG_EIG_TOL || lambda > 1.0 + NEG_EIG_TOL {
            return Err(Error::DomainError { value: lambda });
        }
        if lambda > 0.0 {
            acc -= lambda * lambda.log2();
        }
    }
    // -λ log λ < 0 only for λ slightly above 1
    Ok(if acc < 0.0 && acc > -ENTROPY_TOL { 0.0 } else { acc })
}
