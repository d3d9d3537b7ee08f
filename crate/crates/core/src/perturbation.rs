//! First-order calculus for elementary transformations (ETs) of a measurement basis.
//!
//! An ET mixes two basis vectors `|ξ_i⟩, |ξ_j⟩` by a small angle `ε` and leaves
//! the others alone:
//!
//! ```text
//! |ξ_i'⟩ = cos ε |ξ_i⟩ + z sin ε |ξ_j⟩
//! |ξ_j'⟩ = cos ε |ξ_j⟩ − z̄ sin ε |ξ_i⟩
//! ```
//!
//! with `z = 1` for a real rotation and `z = ±i` for a phase rotation. The two
//! kinds together span every direction of the unitary group that can change
//! `S̄` (pure column phases never do). For the phase kind the sign of `z`
//! follows the index order (`+i` when `i < j`), so that reversing the pair is
//! the inverse transformation for both kinds.
//!
//! For a generic `z` the branch states move as
//! `|ξ_i'⟩^S = |ξ_i⟩^S + ε(a_ij|ξ_i⟩^S + z̄ b_ij|ξ_j⟩^S)` and the branch RDM
//! change involves `Δ_ij = ½(z Q R† + z̄ R Q†)`, which reduces to the familiar
//! symmetric form for `z = 1`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, CMatrix, C64, PROB_TOL};
use crate::measurement::{unnormalized_branches, MeasurementBasis};
use crate::states::{branch_matrix, Part, TripartiteState};

/// Tolerance on `Tr ρ^A_1`.
pub const TRACELESS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EtKind {
    Real,
    Phase,
}

impl EtKind {
    pub const ALL: [EtKind; 2] = [EtKind::Real, EtKind::Phase];

    pub fn as_str(&self) -> &'static str {
        match self {
            EtKind::Real => "real",
            EtKind::Phase => "phase",
        }
    }
}

impl fmt::Display for EtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An ordered pair of basis columns and the kind of mixing between them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EtDirection {
    pub i: usize,
    pub j: usize,
    pub kind: EtKind,
}

impl EtDirection {
    pub fn new(i: usize, j: usize, kind: EtKind) -> Result<Self> {
        if i == j {
            return Err(Error::SameIndex(i));
        }
        Ok(Self { i, j, kind })
    }

    pub fn real(i: usize, j: usize) -> Self {
        Self { i, j, kind: EtKind::Real }
    }

    pub fn phase(i: usize, j: usize) -> Self {
        Self { i, j, kind: EtKind::Phase }
    }

    /// The mixing coefficient `z`.
    pub fn coupling(&self) -> C64 {
        match self.kind {
            EtKind::Real => C64::new(1.0, 0.0),
            EtKind::Phase if self.i < self.j => C64::new(0.0, 1.0),
            EtKind::Phase => C64::new(0.0, -1.0),
        }
    }

    pub fn reversed(&self) -> Self {
        Self { i: self.j, j: self.i, kind: self.kind }
    }

    fn check(&self, dim: usize) -> Result<()> {
        for index in [self.i, self.j] {
            if index >= dim {
                return Err(Error::IndexOutOfRange { index, dim });
            }
        }
        if self.i == self.j {
            return Err(Error::SameIndex(self.i));
        }
        Ok(())
    }
}

/// Every unordered pair `i < j` of a `dim`-dimensional basis, both kinds.
pub fn all_directions(dim: usize) -> Vec<EtDirection> {
    let mut dirs = Vec::with_capacity(dim * dim.saturating_sub(1));
    for i in 0..dim {
        for j in i + 1..dim {
            for kind in EtKind::ALL {
                dirs.push(EtDirection { i, j, kind });
            }
        }
    }
    dirs
}

/// Applies the exact (unitary) ET of angle `epsilon`.
pub fn apply_et(basis: &MeasurementBasis, dir: EtDirection, epsilon: f64) -> Result<MeasurementBasis> {
    dir.check(basis.dim())?;
    let m = basis.matrix();
    let (s, c) = epsilon.sin_cos();
    let z = dir.coupling();
    let mut out = m.clone();
    for r in 0..m.rows() {
        let xi = m[(r, dir.i)];
        let xj = m[(r, dir.j)];
        out[(r, dir.i)] = xi * c + z * s * xj;
        out[(r, dir.j)] = xj * c - z.conj() * s * xi;
    }
    Ok(MeasurementBasis::from_trusted(out))
}

/// The first-order quantities of an ET for two branches with nonzero probability.
#[derive(Clone, Debug)]
pub struct PerturbationData {
    pub direction: EtDirection,
    pub p_i: f64,
    pub p_j: f64,
    /// Branch entropies `S_i`, `S_j` in bits.
    pub s_i: f64,
    pub s_j: f64,
    /// First-order probability change: `p_i' = p_i + ε k_ij`, `p_j' = p_j − ε k_ji`.
    pub k_ij: f64,
    pub k_ji: f64,
    pub a_ij: f64,
    pub a_ji: f64,
    pub b_ij: f64,
    pub b_ji: f64,
    pub delta_ij: CMatrix,
    /// `ρ^A(ξ_i') = ρ^A(ξ_i) + ε ρ^A_1(ij)`.
    pub rho_a1_ij: CMatrix,
    /// `ρ^A(ξ_j') = ρ^A(ξ_j) − ε ρ^A_1(ji)`.
    pub rho_a1_ji: CMatrix,
    /// `S_i' = S_i − ε S^1_ij`.
    pub s1_ij: f64,
    /// `S_j' = S_j + ε S^1_ji`.
    pub s1_ji: f64,
    /// `S̄' = S̄ + ε S̄₁`.
    pub sbar1: f64,
}

/// Evaluates the ET first-order calculus for `dir` at `basis`.
pub fn perturbation_data(state: &TripartiteState, basis: &MeasurementBasis, dir: EtDirection) -> Result<PerturbationData> {
    let d = state.dims();
    if basis.dim() != d.c {
        return Err(Error::DimensionMismatch(format!("basis has dimension {}, part C has {}", basis.dim(), d.c)));
    }
    dir.check(d.c)?;
    let rows = unnormalized_branches(state, basis.matrix());
    let (vi, vj) = (rows.row(dir.i), rows.row(dir.j));
    let p_i = linalg::norm_sqr(vi);
    let p_j = linalg::norm_sqr(vj);
    for (index, probability) in [(dir.i, p_i), (dir.j, p_j)] {
        if probability <= PROB_TOL {
            return Err(Error::DegenerateBranch { index, probability });
        }
    }
    let z = dir.coupling();

    // ⟨ξ_i|ρ^C|ξ_j⟩
    let rho_c = state.reduced_density(Part::C);
    let xi = basis.column(dir.i);
    let xj = basis.column(dir.j);
    let r_ij = linalg::inner(&xi, &rho_c.matrix().apply(&xj));
    let k_ij = 2.0 * (z * r_ij).re;
    let k_ji = k_ij;

    let a_ij = -0.5 * k_ij / p_i;
    let a_ji = -0.5 * k_ji / p_j;
    let b_ij = (p_j / p_i).sqrt();
    let b_ji = (p_i / p_j).sqrt();

    let q = branch_matrix(&normalized(vi, p_i), d.a, d.b)?;
    let r = branch_matrix(&normalized(vj, p_j), d.a, d.b)?;
    let rho_i = &q * &q.adjoint();
    let rho_j = &r * &r.adjoint();
    let qr = (&q * &r.adjoint()).scale(z);
    let delta_ij = (&qr + &qr.adjoint()).scale_real(0.5);

    let rho_a1_ij = &rho_i.scale_real(2.0 * a_ij) + &delta_ij.scale_real(2.0 * b_ij);
    let rho_a1_ji = &rho_j.scale_real(2.0 * a_ji) + &delta_ij.scale_real(2.0 * b_ji);

    let eig_i = hermitian_eig(&rho_i)?;
    let eig_j = hermitian_eig(&rho_j)?;
    let s_i = linalg::xlog2x_spectrum(&eig_i.eigenvalues)?;
    let s_j = linalg::xlog2x_spectrum(&eig_j.eigenvalues)?;
    let s1_ij = spectral_first_order(&eig_i, &rho_a1_ij)?;
    let s1_ji = spectral_first_order(&eig_j, &rho_a1_ji)?;

    let sbar1 = k_ij * s_i - p_i * s1_ij - k_ji * s_j + p_j * s1_ji;
    Ok(PerturbationData {
        direction: dir,
        p_i,
        p_j,
        s_i,
        s_j,
        k_ij,
        k_ji,
        a_ij,
        a_ji,
        b_ij,
        b_ji,
        delta_ij,
        rho_a1_ij,
        rho_a1_ji,
        s1_ij,
        s1_ji,
        sbar1,
    })
}

fn normalized(v: &[C64], p: f64) -> Vec<C64> {
    let inv = 1.0 / p.sqrt();
    v.iter().map(|z| z * inv).collect()
}

/// First-order change `S̄₁` of the average entropy along `dir`.
///
/// Zero whenever either branch has vanishing probability: then `k_ij = 0` and
/// the surviving branch state is unchanged to first order.
pub fn sbar1(state: &TripartiteState, basis: &MeasurementBasis, dir: EtDirection) -> Result<f64> {
    match perturbation_data(state, basis, dir) {
        Ok(data) => Ok(data.sbar1),
        Err(Error::DegenerateBranch { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `S^1 = Tr[ρ^A_1 log₂ ρ^A]`, evaluated in the eigenbasis of `ρ^A`.
///
/// Eigenvalues at or below `PROB_TOL` contribute nothing: in the kernel of a
/// branch RDM the first-order change has zero expectation.
pub fn entropy_first_order(rho_a: &crate::states::DensityMatrix, rho_a1: &CMatrix) -> Result<f64> {
    let trace = rho_a1.trace();
    if trace.norm() > TRACELESS_TOL {
        return Err(Error::NotTraceless { trace: trace.norm() });
    }
    if rho_a1.rows() != rho_a.dim() || !rho_a1.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "perturbation is {}x{}, density matrix is {}x{}",
            rho_a1.rows(),
            rho_a1.cols(),
            rho_a.dim(),
            rho_a.dim()
        )));
    }
    spectral_first_order(&rho_a.eigen()?, rho_a1)
}

fn spectral_first_order(eig: &linalg::HermitianEig, rho_a1: &CMatrix) -> Result<f64> {
    let trace = rho_a1.trace();
    if trace.norm() > TRACELESS_TOL {
        return Err(Error::NotTraceless { trace: trace.norm() });
    }
    let mut acc = 0.0;
    for (l, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= PROB_TOL {
            continue;
        }
        let v = eig.eigenvectors.column(l);
        let lambda1 = linalg::inner(&v, &rho_a1.apply(&v)).re;
        acc += lambda1 * lambda.log2();
    }
    Ok(acc)
}

/// `S̄₁` for every direction of [`all_directions`], in that order.
///
/// Same values as calling [`sbar1`] per direction, but the branch
/// eigendecompositions are shared between pairs.
pub fn gradient(state: &TripartiteState, basis: &MeasurementBasis) -> Result<Vec<f64>> {
    Ok(value_and_gradient(state, basis)?.1)
}

/// `S̄` together with [`gradient`], from one set of branch eigendecompositions.
pub fn value_and_gradient(state: &TripartiteState, basis: &MeasurementBasis) -> Result<(f64, Vec<f64>)> {
    let d = state.dims();
    if basis.dim() != d.c {
        return Err(Error::DimensionMismatch(format!("basis has dimension {}, part C has {}", basis.dim(), d.c)));
    }
    let u = basis.matrix();
    let rows = unnormalized_branches(state, u);
    let rho_c = state.reduced_density(Part::C);
    // ⟨ξ_i|ρ^C|ξ_j⟩ for all pairs
    let r = &(&u.adjoint() * rho_c.matrix()) * u;

    struct BranchInfo {
        p: f64,
        q: CMatrix,
        entropy: f64,
        log: CMatrix,
    }
    let mut info: Vec<Option<BranchInfo>> = Vec::with_capacity(d.c);
    for i in 0..d.c {
        let v = rows.row(i);
        let p = linalg::norm_sqr(v);
        if p <= PROB_TOL {
            info.push(None);
            continue;
        }
        let q = branch_matrix(&normalized(v, p), d.a, d.b)?;
        let eig = hermitian_eig(&(&q * &q.adjoint()))?;
        let entropy = linalg::xlog2x_spectrum(&eig.eigenvalues)?;
        let mut log = CMatrix::zeros(d.a, d.a);
        for (l, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > PROB_TOL {
                let vl = eig.eigenvectors.column(l);
                log = &log + &CMatrix::outer(&vl, &vl).scale_real(lambda.log2());
            }
        }
        info.push(Some(BranchInfo { p, q, entropy, log }));
    }

    let mut out = Vec::with_capacity(d.c * d.c.saturating_sub(1));
    for i in 0..d.c {
        for j in i + 1..d.c {
            let pair = match (&info[i], &info[j]) {
                (Some(bi), Some(bj)) => {
                    let qr = &bi.q * &bj.q.adjoint();
                    Some((bi, bj, qr.trace_product(&bi.log), qr.trace_product(&bj.log)))
                }
                _ => None,
            };
            for kind in EtKind::ALL {
                let Some((bi, bj, ci, cj)) = &pair else {
                    out.push(0.0);
                    continue;
                };
                let z = EtDirection { i, j, kind }.coupling();
                let k = 2.0 * (z * r[(i, j)]).re;
                let a_ij = -0.5 * k / bi.p;
                let a_ji = -0.5 * k / bj.p;
                let b_ij = (bj.p / bi.p).sqrt();
                let b_ji = (bi.p / bj.p).sqrt();
                // Tr(ρ_i log₂ρ_i) = −S_i and Tr(Δ L) = Re(z Tr(Q R† L))
                let s1_ij = -2.0 * a_ij * bi.entropy + 2.0 * b_ij * (z * ci).re;
                let s1_ji = -2.0 * a_ji * bj.entropy + 2.0 * b_ji * (z * cj).re;
                out.push(k * bi.entropy - bi.p * s1_ij - k * bj.entropy + bj.p * s1_ji);
            }
        }
    }
    let avg = info.iter().flatten().map(|b| b.p * b.entropy).sum();
    Ok((avg, out))
}
