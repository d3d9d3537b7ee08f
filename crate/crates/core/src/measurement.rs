//! Projective measurements on part C and the decompositions they induce on S.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::format_real;
use crate::linalg::{self, CMatrix, C64, PROB_TOL};
use crate::states::{bipartite_branch_rdm, complex_normal, DensityMatrix, Part, TripartiteState};

/// Maximum `|U†U - I|` accepted for a measurement basis.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Orthonormal measurement vectors `|ξ_i⟩` on C, stored as the columns of a unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    matrix: CMatrix,
}

impl MeasurementBasis {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let defect = matrix.unitarity_defect();
        if defect > UNITARITY_TOL {
            return Err(Error::BasisNotUnitary { defect });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn computational(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim) }
    }

    /// Eigenvectors of `ρ^C`, ordered by descending eigenvalue.
    pub fn eigenbasis(state: &TripartiteState) -> Result<Self> {
        let eig = state.reduced_density(Part::C).eigen()?;
        Ok(Self { matrix: eig.eigenvectors })
    }

    /// Qubit basis `{cos θ/2|0⟩ + e^{iφ} sin θ/2|1⟩, sin θ/2|0⟩ − e^{iφ} cos θ/2|1⟩}`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = C64::from_polar(1.0, phi);
        let matrix = CMatrix::from_vec(2, 2, vec![C64::new(c, 0.0), C64::new(s, 0.0), e * s, -e * c])
            .expect("2x2 shape");
        Self { matrix }
    }

    /// Haar-random unitary: Gram-Schmidt on complex Gaussian columns.
    pub fn haar_random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
            let mut ok = true;
            for _ in 0..dim {
                let mut v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
                // two passes of modified Gram-Schmidt for orthogonality to machine precision
                for _ in 0..2 {
                    for u in &cols {
                        let proj = linalg::inner(u, &v);
                        for (x, y) in v.iter_mut().zip(u) {
                            *x -= proj * y;
                        }
                    }
                }
                let n = linalg::norm_sqr(&v).sqrt();
                if n < 1e-8 {
                    ok = false;
                    break;
                }
                cols.push(v.into_iter().map(|z| z / n).collect());
            }
            if ok {
                return Self { matrix: CMatrix::from_fn(dim, dim, |r, c| cols[c][r]) };
            }
        }
    }

    pub fn haar_random_seeded(dim: usize, seed: u64) -> Self {
        Self::haar_random(dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn column(&self, i: usize) -> Vec<C64> {
        self.matrix.column(i)
    }

    /// Parses `{"matrix":[[[re,im],...],...]}` (row-major, columns are the basis vectors).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: BasisFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(crate::format::matrix_from_rows(&file.matrix)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "matrix": crate::format::matrix_to_rows(&self.matrix) })
    }
}

#[derive(Serialize, Deserialize)]
struct BasisFile {
    matrix: Vec<Vec<[f64; 2]>>,
}

/// One outcome of the measurement on C.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// Column of the basis that produced this outcome.
    pub index: usize,
    pub probability: f64,
    /// Normalized post-measurement state of S.
    pub state: Vec<C64>,
    /// Entanglement entropy of `state` in bits.
    pub entropy: f64,
}

/// Ensemble `{p_i, |ξ_i⟩^S}` induced on S, with its average entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub branches: Vec<Branch>,
    pub avg_entropy: f64,
}

impl Decomposition {
    /// `Σ p_i |ξ_i⟩⟨ξ_i|`, which must equal `ρ^S` for any unitary basis.
    pub fn ensemble_density(&self) -> CMatrix {
        let n = self.branches.first().map_or(0, |b| b.state.len());
        let mut acc = CMatrix::zeros(n, n);
        for b in &self.branches {
            acc = &acc + &CMatrix::outer(&b.state, &b.state).scale_real(b.probability);
        }
        acc
    }
}

fn check_dims(state: &TripartiteState, basis: &MeasurementBasis) -> Result<()> {
    if basis.dim() != state.dims().c {
        return Err(Error::DimensionMismatch(format!(
            "basis has dimension {}, part C has dimension {}",
            basis.dim(),
            state.dims().c
        )));
    }
    Ok(())
}

/// Unnormalized post-measurement vectors: the rows of `U† g`.
pub(crate) fn unnormalized_branches(state: &TripartiteState, basis: &CMatrix) -> CMatrix {
    &basis.adjoint() * &state.coefficient_matrix_cs()
}

/// Entropy of a normalized S-vector.
pub(crate) fn branch_entropy(branch: &[C64], dim_a: usize, dim_b: usize) -> Result<f64> {
    bipartite_branch_rdm(branch, dim_a, dim_b)?.entropy()
}

/// Measures C in `basis` and returns the induced decomposition of S.
///
/// Outcomes with probability at or below [`PROB_TOL`] are dropped.
pub fn decompose(state: &TripartiteState, basis: &MeasurementBasis) -> Result<Decomposition> {
    check_dims(state, basis)?;
    let defect = basis.matrix.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::BasisNotUnitary { defect });
    }
    let d = state.dims();
    let rows = unnormalized_branches(state, &basis.matrix);
    let mut branches = Vec::with_capacity(d.c);
    for i in 0..d.c {
        let v = rows.row(i);
        let p = linalg::norm_sqr(v);
        if p <= PROB_TOL {
            continue;
        }
        let inv = 1.0 / p.sqrt();
        let branch: Vec<C64> = v.iter().map(|z| z * inv).collect();
        let entropy = branch_entropy(&branch, d.a, d.b)?;
        branches.push(Branch { index: i, probability: p, state: branch, entropy });
    }
    let avg_entropy = branches.iter().map(|b| b.probability * b.entropy).sum();
    Ok(Decomposition { branches, avg_entropy })
}

/// Average entanglement entropy `S̄ = Σ p_i S_i` (bits) after measuring C in `basis`.
pub fn average_entropy(state: &TripartiteState, basis: &MeasurementBasis) -> Result<f64> {
    Ok(decompose(state, basis)?.avg_entropy)
}

/// `max |Σ p_i ρ^S_i − ρ^S|` for a decomposition of `state`.
pub fn ensemble_residual(state: &TripartiteState, dec: &Decomposition) -> f64 {
    let rho: DensityMatrix = state.reduced_density(Part::AB);
    if dec.branches.is_empty() {
        return rho.matrix().max_abs();
    }
    dec.ensemble_density().max_abs_diff(rho.matrix())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub phi: f64,
    pub avg_entropy: f64,
}

/// `S̄` over a uniform Bloch grid: θ over `[0, π]` including both ends, φ over
/// `[0, 2π)`. Rows are θ-major.
pub fn sweep(state: &TripartiteState, theta_steps: usize, phi_steps: usize) -> Result<Vec<SweepPoint>> {
    if state.dims().c != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Bloch sweeps need a qubit C, got dimension {}",
            state.dims().c
        )));
    }
    if theta_steps == 0 || phi_steps == 0 {
        return Err(Error::InvalidArgument("sweep needs at least one step in θ and φ".into()));
    }
    let grid: Vec<(f64, f64)> = (0..theta_steps)
        .flat_map(|t| (0..phi_steps).map(move |p| (theta_at(t, theta_steps), 2.0 * PI * p as f64 / phi_steps as f64)))
        .collect();
    grid.par_iter()
        .map(|&(theta, phi)| {
            let avg_entropy = average_entropy(state, &MeasurementBasis::bloch(theta, phi))?;
            Ok(SweepPoint { theta, phi, avg_entropy })
        })
        .collect()
}

fn theta_at(step: usize, steps: usize) -> f64 {
    if steps == 1 {
        0.0
    } else if step == steps - 1 {
        PI
    } else {
        PI * step as f64 / (steps - 1) as f64
    }
}

/// Writes `theta,phi,avg_entropy_bits` rows with 12 significant digits.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,phi,avg_entropy_bits")?;
    for p in points {
        writeln!(out, "{},{},{}", format_real(p.theta), format_real(p.phi), format_real(p.avg_entropy))?;
    }
    Ok(())
}

/// Embeds a basis on C into C⊗ancilla as `U ⊗ I`.
pub fn embed_basis(basis: &MeasurementBasis, ancilla_dim: usize) -> MeasurementBasis {
    MeasurementBasis { matrix: basis.matrix.kron(&CMatrix::identity(ancilla_dim)) }
}
