//! Pure tripartite states, their reductions, and standard fixtures.
//!
//! Amplitudes are stored a-major, then b, then c:
//! `index = (a·dim_b + b)·dim_c + c`. The composite `S = A⊗B` index is
//! `j = a·dim_b + b`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, xlog2x_spectrum, CMatrix, C64, HERM_TOL, NEG_EIG_TOL, ONE, ZERO};

/// Inputs whose norm² is further than this from one are rejected.
pub const NORMALIZATION_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Dims {
    pub const fn new(a: usize, b: usize, c: usize) -> Self {
        Self { a, b, c }
    }

    pub fn qubits() -> Self {
        Self::new(2, 2, 2)
    }

    /// Dimension of the composite `S = A⊗B`.
    pub fn s(&self) -> usize {
        self.a * self.b
    }

    pub fn total(&self) -> usize {
        self.a * self.b * self.c
    }

    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.b + b) * self.c + c
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Subsystems that can be kept by [`TripartiteState::reduced_density`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    A,
    B,
    C,
    AB,
}

/// A normalized pure state on `A⊗B⊗C`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteState {
    dims: Dims,
    amplitudes: Vec<C64>,
}

impl TripartiteState {
    /// Validates dimensions and renormalizes amplitudes whose norm is within
    /// [`NORMALIZATION_SLACK`] of one.
    pub fn new(dims: Dims, amplitudes: Vec<C64>) -> Result<Self> {
        if dims.a == 0 || dims.b == 0 || dims.c == 0 {
            return Err(Error::DimensionMismatch(format!("dimensions must be positive, got {dims}")));
        }
        if amplitudes.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims} need {} amplitudes, got {}",
                dims.total(),
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("amplitudes must be finite".into()));
        }
        let norm_sqr = linalg::norm_sqr(&amplitudes);
        if norm_sqr == 0.0 {
            return Err(Error::NotNormalizable);
        }
        if (norm_sqr - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let inv = 1.0 / norm_sqr.sqrt();
        let amplitudes = amplitudes.into_iter().map(|z| z * inv).collect();
        Ok(Self { dims, amplitudes })
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(dims: Dims, amplitudes: Vec<C64>) -> Result<Self> {
        let norm_sqr = linalg::norm_sqr(&amplitudes);
        if norm_sqr == 0.0 || !norm_sqr.is_finite() {
            return Err(Error::NotNormalizable);
        }
        let inv = 1.0 / norm_sqr.sqrt();
        Self::new(dims, amplitudes.into_iter().map(|z| z * inv).collect())
    }

    /// Builds a state from `(a, b, c, amplitude)` entries; everything else is zero.
    pub fn from_entries(dims: Dims, entries: &[(usize, usize, usize, C64)]) -> Result<Self> {
        let mut amps = vec![ZERO; dims.total()];
        for &(a, b, c, z) in entries {
            if a >= dims.a || b >= dims.b || c >= dims.c {
                return Err(Error::DimensionMismatch(format!("basis label |{a}{b}{c}⟩ outside {dims}")));
            }
            amps[dims.index(a, b, c)] += z;
        }
        Self::new(dims, amps)
    }

    /// `(|100⟩ + |010⟩ + |001⟩)/√3`.
    pub fn w() -> Self {
        let x = C64::new(1.0 / 3f64.sqrt(), 0.0);
        Self::from_entries(Dims::qubits(), &[(1, 0, 0, x), (0, 1, 0, x), (0, 0, 1, x)]).expect("valid W state")
    }

    /// `(|000⟩ + |111⟩)/√2`.
    pub fn ghz() -> Self {
        let x = C64::new(1.0 / 2f64.sqrt(), 0.0);
        Self::from_entries(Dims::qubits(), &[(0, 0, 0, x), (1, 1, 1, x)]).expect("valid GHZ state")
    }

    /// `|000⟩` in the given dimensions.
    pub fn product(dims: Dims) -> Result<Self> {
        Self::from_entries(dims, &[(0, 0, 0, ONE)])
    }

    /// Unitarily invariant random state: i.i.d. complex normal amplitudes, normalized.
    pub fn haar_random(dims: Dims, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::haar_random_with(dims, &mut rng)
    }

    pub fn haar_random_with<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Result<Self> {
        if dims.a == 0 || dims.b == 0 || dims.c == 0 {
            return Err(Error::DimensionMismatch(format!("dimensions must be positive, got {dims}")));
        }
        let amps: Vec<C64> = (0..dims.total()).map(|_| complex_normal(rng)).collect();
        Self::normalized(dims, amps)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, a: usize, b: usize, c: usize) -> C64 {
        self.amplitudes[self.dims.index(a, b, c)]
    }

    /// The `dim_c × dim_a·dim_b` coefficient matrix `g` with rows indexed by
    /// C and columns by the composite S index.
    pub fn coefficient_matrix_cs(&self) -> CMatrix {
        let d = self.dims;
        CMatrix::from_fn(d.c, d.s(), |c, j| self.amplitudes[j * d.c + c])
    }

    /// Reduced density matrix on the kept subsystem.
    pub fn reduced_density(&self, keep: Part) -> DensityMatrix {
        let d = self.dims;
        let m = match keep {
            Part::C => {
                let g = self.coefficient_matrix_cs();
                &g * &g.adjoint()
            }
            Part::AB => {
                // ρ^S_{jj'} = Σ_c g_{cj} g*_{cj'}
                let g = self.coefficient_matrix_cs();
                &g.transpose() * &g.conj()
            }
            Part::A => {
                let mut rho = CMatrix::zeros(d.a, d.a);
                let rest = d.b * d.c;
                for a in 0..d.a {
                    for a2 in 0..d.a {
                        let x = &self.amplitudes[a * rest..(a + 1) * rest];
                        let y = &self.amplitudes[a2 * rest..(a2 + 1) * rest];
                        rho[(a, a2)] = linalg::inner(y, x);
                    }
                }
                rho
            }
            Part::B => {
                let mut rho = CMatrix::zeros(d.b, d.b);
                for a in 0..d.a {
                    for c in 0..d.c {
                        for b in 0..d.b {
                            let x = self.amplitude(a, b, c);
                            for b2 in 0..d.b {
                                rho[(b, b2)] += x * self.amplitude(a, b2, c).conj();
                            }
                        }
                    }
                }
                rho
            }
        };
        DensityMatrix::from_trusted(m)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StateFile {
            dims: [self.dims.a, self.dims.b, self.dims.c],
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        })
        .expect("state serializes")
    }

    /// Parses `{"dims":[dA,dB,dC],"amplitudes":[[re,im],...]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let dims = Dims::new(file.dims[0], file.dims[1], file.dims[2]);
        if file.amplitudes.len() != dims.total() {
            return Err(Error::Parse(format!(
                "amplitudes array has length {}, expected {} for dims {dims}",
                file.amplitudes.len(),
                dims.total()
            )));
        }
        let amps = file.amplitudes.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        Self::new(dims, amps)
    }
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: [usize; 3],
    amplitudes: Vec<[f64; 2]>,
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity, each to `HERM_TOL`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotDensityMatrix(format!("matrix is {}x{}", matrix.rows(), matrix.cols())));
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERM_TOL {
            return Err(Error::NotDensityMatrix(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > HERM_TOL {
            return Err(Error::NotDensityMatrix(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eig(&matrix)?;
        if let Some(&min) = eig.eigenvalues.last() {
            if min < -NEG_EIG_TOL {
                return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> Result<linalg::HermitianEig> {
        hermitian_eig(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.eigenvalues)
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        xlog2x_spectrum(&self.eigenvalues()?)
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }
}

/// Reshapes a normalized vector on `A⊗B` into its `dim_a × dim_b` matrix `Q`.
pub fn branch_matrix(branch: &[C64], dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    CMatrix::from_vec(dim_a, dim_b, branch.to_vec())
}

/// `ρ^A = Tr_B |ξ⟩⟨ξ| = Q Q†` for a normalized bipartite pure state.
pub fn bipartite_branch_rdm(branch: &[C64], dim_a: usize, dim_b: usize) -> Result<DensityMatrix> {
    if branch.len() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "branch has {} entries, expected {}·{}",
            branch.len(),
            dim_a,
            dim_b
        )));
    }
    let norm_sqr = linalg::norm_sqr(branch);
    if (norm_sqr - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let q = branch_matrix(branch, dim_a, dim_b)?;
    Ok(DensityMatrix::from_trusted(&q * &q.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn product_state_is_valid() {
        let s = TripartiteState::product(Dims::qubits()).unwrap();
        assert_eq!(s.amplitude(0, 0, 0), ONE);
        let g = s.coefficient_matrix_cs();
        assert_eq!(g[(0, 0)], ONE);
        assert!((g.frobenius_norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            TripartiteState::new(Dims::qubits(), vec![ONE; 7]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(TripartiteState::new(Dims::qubits(), vec![ZERO; 8]), Err(Error::NotNormalizable)));
        assert!(matches!(
            TripartiteState::new(Dims::new(1, 1, 1), vec![r(1.1)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(TripartiteState::new(Dims::new(0, 1, 1), vec![]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn renormalizes_decimal_literals() {
        let s = TripartiteState::new(Dims::new(1, 1, 2), vec![r(0.7071068), r(0.7071068)]).unwrap();
        assert!((linalg::norm_sqr(s.amplitudes()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn w_coefficient_matrix() {
        let g = TripartiteState::w().coefficient_matrix_cs();
        let x = 1.0 / 3f64.sqrt();
        let expected = CMatrix::from_vec(2, 4, vec![r(0.0), r(x), r(x), r(0.0), r(x), r(0.0), r(0.0), r(0.0)]).unwrap();
        assert!(g.max_abs_diff(&expected) < 1e-15);
        let eig = hermitian_eig(&(&g * &g.adjoint())).unwrap();
        assert!((eig.eigenvalues[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_coefficient_matrix() {
        let g = TripartiteState::ghz().coefficient_matrix_cs();
        let x = 1.0 / 2f64.sqrt();
        let expected = CMatrix::from_vec(2, 4, vec![r(x), r(0.0), r(0.0), r(0.0), r(0.0), r(0.0), r(0.0), r(x)]).unwrap();
        assert!(g.max_abs_diff(&expected) < 1e-15);
        let s = linalg::svd(&g).unwrap();
        assert!((s.singular_values[0] - x).abs() < 1e-14);
        assert!((s.singular_values[1] - x).abs() < 1e-14);
    }

    #[test]
    fn w_schmidt_coefficients() {
        let s = linalg::svd(&TripartiteState::w().coefficient_matrix_cs()).unwrap();
        assert!((s.singular_values[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((s.singular_values[1] - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn reduced_c_of_fixtures() {
        let w = TripartiteState::w().reduced_density(Part::C).eigenvalues().unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-14 && (w[1] - 1.0 / 3.0).abs() < 1e-14);
        let ghz = TripartiteState::ghz().reduced_density(Part::C);
        assert!(ghz.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn reduced_ab_of_product_is_projector() {
        let rho = TripartiteState::product(Dims::qubits()).unwrap().reduced_density(Part::AB);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert_eq!(rho.matrix()[(0, 0)], ONE);
    }

    #[test]
    fn reduced_ab_matches_direct_partial_trace() {
        let s = TripartiteState::haar_random(Dims::new(2, 3, 2), 5).unwrap();
        let d = s.dims();
        let rho = s.reduced_density(Part::AB);
        for j in 0..d.s() {
            for k in 0..d.s() {
                let direct: C64 = (0..d.c)
                    .map(|c| s.amplitudes()[j * d.c + c] * s.amplitudes()[k * d.c + c].conj())
                    .sum();
                assert!((rho.matrix()[(j, k)] - direct).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn branch_rdms_from_text() {
        let x = 1.0 / 2f64.sqrt();
        let bell = [r(0.0), r(x), r(x), r(0.0)];
        let rho = bipartite_branch_rdm(&bell, 2, 2).unwrap();
        assert!(rho.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);

        let rho = bipartite_branch_rdm(&[ONE, ZERO, ZERO, ZERO], 2, 2).unwrap();
        assert!(rho.matrix().max_abs_diff(&CMatrix::from_real_diag(&[1.0, 0.0])) < 1e-15);

        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let rho = bipartite_branch_rdm(&[a, ZERO, ZERO, b], 2, 2).unwrap();
        assert!(rho.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.36, 0.64])) < 1e-15);

        assert!(matches!(bipartite_branch_rdm(&[r(2.0), ZERO, ZERO, ZERO], 2, 2), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn haar_is_deterministic() {
        let a = TripartiteState::haar_random(Dims::new(2, 3, 4), 11).unwrap();
        let b = TripartiteState::haar_random(Dims::new(2, 3, 4), 11).unwrap();
        assert_eq!(a, b);
        let c = TripartiteState::haar_random(Dims::new(2, 3, 4), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn haar_scalar_state() {
        let s = TripartiteState::haar_random(Dims::new(1, 1, 1), 0).unwrap();
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip_and_length_error() {
        let w = TripartiteState::w();
        let text = w.to_json().to_string();
        let back = TripartiteState::from_json_str(&text).unwrap();
        assert!(back.amplitudes().iter().zip(w.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-15));

        let err = TripartiteState::from_json_str(r#"{"dims":[2,2,2],"amplitudes":[[1,0]]}"#).unwrap_err();
        assert!(err.to_string().contains("expected 8"), "{err}");
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::from_real_diag(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(CMatrix::from_real_diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(CMatrix::from_real_diag(&[1.5, -0.5])).is_err());
        let mut m = CMatrix::from_real_diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::new(m).is_err());
    }
}
