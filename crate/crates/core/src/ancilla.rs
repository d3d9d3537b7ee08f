//! Bounds on the formation and assistance entanglement of a bipartite mixed
//! state, via a purification whose C part is enlarged by an ancilla.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::matrix_from_rows;
use crate::linalg::{CMatrix, PROB_TOL, ZERO};
use crate::measurement::MeasurementBasis;
use crate::optimizer::{optimize_with_starts, OptimizeConfig, Target};
use crate::states::{DensityMatrix, Dims, TripartiteState};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedState {
    pub source: DensityMatrix,
    pub state: TripartiteState,
    pub ancilla_dim: usize,
}

impl PurifiedState {
    pub fn new(source: DensityMatrix, dim_a: usize, dim_b: usize, ancilla_dim: usize) -> Result<Self> {
        let state = extend_with_ancilla(&purify(&source, dim_a, dim_b)?, ancilla_dim)?;
        Ok(Self { source, state, ancilla_dim })
    }
}

fn check_dims(rho: &DensityMatrix, dim_a: usize, dim_b: usize) -> Result<()> {
    if dim_a == 0 || dim_b == 0 || dim_a * dim_b != rho.dim() {
        return Err(Error::NotDensityMatrix(format!(
            "matrix is {0}x{0}, which does not match dims [{dim_a}, {dim_b}]",
            rho.dim()
        )));
    }
    Ok(())
}

/// Canonical purification `Σ_k √λ_k |k⟩^C |v_k⟩^{AB}` over the eigenpairs of
/// `rho` above `PROB_TOL`, in descending eigenvalue order.
pub fn purify(rho: &DensityMatrix, dim_a: usize, dim_b: usize) -> Result<TripartiteState> {
    check_dims(rho, dim_a, dim_b)?;
    let eig = rho.eigen()?;
    let kept: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > PROB_TOL).collect();
    if kept.is_empty() {
        return Err(Error::NotDensityMatrix("no eigenvalue above the probability floor".into()));
    }
    let rank = kept.len();
    let s = dim_a * dim_b;
    let mut amps = vec![ZERO; s * rank];
    for (c, &k) in kept.iter().enumerate() {
        let w = eig.eigenvalues[k].sqrt();
        for j in 0..s {
            amps[j * rank + c] = eig.eigenvectors[(j, k)] * w;
        }
    }
    // the dropped eigenvalues leave a norm deficit of at most rank·PROB_TOL
    TripartiteState::normalized(Dims::new(dim_a, dim_b, rank), amps)
}

/// Appends an ancilla of dimension `ancilla_dim` to C, prepared in its first
/// basis state. The new C index is `c·ancilla_dim + ancilla`.
pub fn extend_with_ancilla(state: &TripartiteState, ancilla_dim: usize) -> Result<TripartiteState> {
    if ancilla_dim == 0 {
        return Err(Error::InvalidArgument("ancilla dimension must be at least 1".into()));
    }
    let d = state.dims();
    let dc = d.c * ancilla_dim;
    let mut amps = vec![ZERO; d.s() * dc];
    for (idx, &z) in state.amplitudes().iter().enumerate() {
        let (j, c) = (idx / d.c, idx % d.c);
        amps[j * dc + c * ancilla_dim] = z;
    }
    TripartiteState::new(Dims::new(d.a, d.b, dc), amps)
}

/// Carries a basis on `C⊗ancilla(from)` over to `C⊗ancilla(to)`, `to ≥ from`,
/// acting as the identity on the added levels. The average entropy of the
/// extended state is unchanged by this map.
fn lift_basis(basis: &MeasurementBasis, dim_c: usize, from: usize, to: usize) -> MeasurementBasis {
    let n = dim_c * to;
    let index = |k: usize| (k / from) * to + k % from;
    let mut m = CMatrix::identity(n);
    let covered: Vec<usize> = (0..dim_c * from).map(index).collect();
    for &r in &covered {
        for &c in &covered {
            m[(r, c)] = ZERO;
        }
    }
    for (r0, &r) in covered.iter().enumerate() {
        for (c0, &c) in covered.iter().enumerate() {
            m[(r, c)] = basis.matrix()[(r0, c0)];
        }
    }
    MeasurementBasis::from_trusted(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub ancilla_dim: usize,
    pub ef_bound: f64,
    pub ea_bound: f64,
    pub converged: bool,
}

/// Ancilla sizes `1, 2, 4, …` below the rank, then the rank itself, so the
/// largest extended C has dimension `rank²`.
pub fn default_ancilla_dims(rank: usize) -> Vec<usize> {
    let mut dims = Vec::new();
    let mut m = 1;
    while m < rank {
        dims.push(m);
        m *= 2;
    }
    dims.push(rank.max(1));
    dims
}

/// Upper bound on `E_F^∞` and lower bound on `E_A^∞` of `rho` for each ancilla size.
///
/// Rows are computed in increasing ancilla size, each warm-started from the
/// previous optimum so the bounds are monotone.
pub fn bound_mixed_state(
    rho: &DensityMatrix,
    dim_a: usize,
    dim_b: usize,
    ancilla_dims: &[usize],
    config: &OptimizeConfig,
) -> Result<Vec<BoundRow>> {
    let base = purify(rho, dim_a, dim_b)?;
    let rank = base.dims().c;
    let mut sizes = ancilla_dims.to_vec();
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("ancilla dimension must be at least 1".into()));
    }
    sizes.sort_unstable();
    sizes.dedup();

    let mut rows = Vec::with_capacity(sizes.len());
    let mut prev: Option<(usize, MeasurementBasis, MeasurementBasis)> = None;
    for &m in &sizes {
        let state = extend_with_ancilla(&base, m)?;
        let (warm_min, warm_max) = match &prev {
            Some((from, bmin, bmax)) => (
                vec![lift_basis(bmin, rank, *from, m)],
                vec![lift_basis(bmax, rank, *from, m)],
            ),
            None => (Vec::new(), Vec::new()),
        };
        let lo = optimize_with_starts(&state, Target::Min, config, &warm_min)?;
        let hi = optimize_with_starts(&state, Target::Max, config, &warm_max)?;
        rows.push(BoundRow { ancilla_dim: m, ef_bound: lo.value, ea_bound: hi.value, converged: lo.converged && hi.converged });
        prev = Some((m, lo.basis, hi.basis));
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct DensityFile {
    dims: [usize; 2],
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Parses `{"dims":[dA,dB],"matrix":[[[re,im],...],...]}`, rows first.
pub fn density_from_json_str(text: &str) -> Result<(DensityMatrix, usize, usize)> {
    let file: DensityFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let m = matrix_from_rows(&file.matrix)?;
    let rho = DensityMatrix::new(m)?;
    let [a, b] = file.dims;
    check_dims(&rho, a, b)?;
    Ok((rho, a, b))
}

/// Mixes pure AB states: `Σ w_k |ψ_k⟩⟨ψ_k|`, each `ψ_k` normalized first.
pub fn mixture(weights: &[f64], vectors: &[Vec<C64>]) -> Result<DensityMatrix> {
    let n = vectors.first().map_or(0, Vec::len);
    if weights.len() != vectors.len() || n == 0 || vectors.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch("weights and vectors must align and share a length".into()));
    }
    let mut m = CMatrix::zeros(n, n);
    for (&w, v) in weights.iter().zip(vectors) {
        let nrm = crate::linalg::norm_sqr(v);
        if !(nrm > 0.0) {
            return Err(Error::NotNormalizable);
        }
        m = &m + &CMatrix::outer(v, v).scale_real(w / nrm);
    }
    DensityMatrix::new(m)
}
