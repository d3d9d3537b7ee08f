//! Stationarity of a measurement basis with respect to the average entropy.
//!
//! A basis is stationary when the first-order change `S̄₁` vanishes for every
//! pair of basis vectors whose outcome probabilities are both nonzero. Pairs
//! with a vanishing probability always have `S̄₁ = 0` and are skipped. This is
//! a necessary condition only; it does not tell a maximum from a minimum.

use serde::Serialize;

use crate::error::Result;
use crate::format::round_sig;
use crate::linalg::{self, hermitian_eig, CMatrix, PROB_TOL};
use crate::measurement::{unnormalized_branches, MeasurementBasis};
use crate::perturbation::{perturbation_data, EtDirection, EtKind};
use crate::states::{branch_matrix, TripartiteState};

pub const DEFAULT_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    pub kind: EtKind,
    pub sbar1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityReport {
    pub stationary: bool,
    /// Pair with the largest residual, if any pair qualified.
    pub worst_pair: Option<(usize, usize, EtKind)>,
    pub worst_residual: f64,
    pub per_pair: Vec<PairResidual>,
    pub tolerance: f64,
}

impl OptimalityReport {
    fn from_pairs(per_pair: Vec<PairResidual>, tolerance: f64) -> Self {
        let worst = per_pair
            .iter()
            .max_by(|a, b| a.sbar1.abs().total_cmp(&b.sbar1.abs()));
        let worst_residual = worst.map_or(0.0, |p| p.sbar1.abs());
        let worst_pair = worst.map(|p| (p.i, p.j, p.kind));
        Self { stationary: worst_residual <= tolerance, worst_pair, worst_residual, per_pair, tolerance }
    }

    /// `{"stationary":..,"worst_residual":..,"pairs":[{"i":..,"j":..,"kind":..,"sbar1":..}]}`
    pub fn to_json(&self) -> serde_json::Value {
        let pairs: Vec<PairResidual> = self
            .per_pair
            .iter()
            .map(|p| PairResidual { sbar1: round_sig(p.sbar1), ..*p })
            .collect();
        serde_json::json!({
            "stationary": self.stationary,
            "worst_residual": round_sig(self.worst_residual),
            "pairs": pairs,
        })
    }
}

/// Evaluates `S̄₁` for every qualifying pair and both ET kinds.
pub fn check_optimality(state: &TripartiteState, basis: &MeasurementBasis, tolerance: f64) -> Result<OptimalityReport> {
    let d = state.dims();
    if basis.dim() != d.c {
        return Err(crate::Error::DimensionMismatch(format!(
            "basis has dimension {}, part C has {}",
            basis.dim(),
            d.c
        )));
    }
    if !(tolerance > 0.0) {
        return Err(crate::Error::InvalidArgument("tolerance must be positive".into()));
    }
    let probs = branch_probabilities(state, basis);
    let mut per_pair = Vec::new();
    for i in 0..d.c {
        for j in i + 1..d.c {
            if probs[i] <= PROB_TOL || probs[j] <= PROB_TOL {
                continue;
            }
            for kind in EtKind::ALL {
                let data = perturbation_data(state, basis, EtDirection { i, j, kind })?;
                per_pair.push(PairResidual { i, j, kind, sbar1: data.sbar1 });
            }
        }
    }
    Ok(OptimalityReport::from_pairs(per_pair, tolerance))
}

fn branch_probabilities(state: &TripartiteState, basis: &MeasurementBasis) -> Vec<f64> {
    let rows = unnormalized_branches(state, basis.matrix());
    (0..rows.rows()).map(|i| linalg::norm_sqr(rows.row(i))).collect()
}

/// Stationarity at the eigenbasis of `ρ^C`, where `k_ij = 0` and the
/// condition reduces to `Tr Δ_ij log₂ρ^A(ξ_i) = Tr Δ_ji log₂ρ^A(ξ_j)`.
///
/// The reported per-pair value is the difference of the two traces (real
/// rotations only). It relates to the full first-order change by
/// `S̄₁ = −2√(p_i p_j) · (difference)`.
pub fn check_eigenbasis_condition(state: &TripartiteState, tolerance: f64) -> Result<OptimalityReport> {
    let d = state.dims();
    let basis = MeasurementBasis::eigenbasis(state)?;
    let rows = unnormalized_branches(state, basis.matrix());
    let probs: Vec<f64> = (0..d.c).map(|i| linalg::norm_sqr(rows.row(i))).collect();

    let mut logs: Vec<Option<CMatrix>> = Vec::with_capacity(d.c);
    let mut mats: Vec<Option<CMatrix>> = Vec::with_capacity(d.c);
    for (i, &p) in probs.iter().enumerate() {
        if p <= PROB_TOL {
            logs.push(None);
            mats.push(None);
            continue;
        }
        let inv = 1.0 / p.sqrt();
        let branch: Vec<_> = rows.row(i).iter().map(|z| z * inv).collect();
        let q = branch_matrix(&branch, d.a, d.b)?;
        logs.push(Some(log2_restricted(&(&q * &q.adjoint()))?));
        mats.push(Some(q));
    }

    let mut per_pair = Vec::new();
    for i in 0..d.c {
        for j in i + 1..d.c {
            let (Some(q), Some(r)) = (&mats[i], &mats[j]) else { continue };
            let qr = q * &r.adjoint();
            let delta = (&qr + &qr.adjoint()).scale_real(0.5);
            let lhs = delta.trace_product(logs[i].as_ref().expect("log present")).re;
            let rhs = delta.trace_product(logs[j].as_ref().expect("log present")).re;
            per_pair.push(PairResidual { i, j, kind: EtKind::Real, sbar1: lhs - rhs });
        }
    }
    Ok(OptimalityReport::from_pairs(per_pair, tolerance))
}

/// `log₂ ρ` on the support of `ρ`, zero on its kernel.
fn log2_restricted(rho: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(rho)?;
    let n = rho.rows();
    let mut out = CMatrix::zeros(n, n);
    for (l, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= PROB_TOL {
            continue;
        }
        let v = eig.eigenvectors.column(l);
        out = &out + &CMatrix::outer(&v, &v).scale_real(lambda.log2());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::Dims;
    use std::f64::consts::PI;

    #[test]
    fn fixtures_are_stationary_in_computational_basis() {
        for s in [TripartiteState::w(), TripartiteState::ghz()] {
            let rep = check_optimality(&s, &MeasurementBasis::computational(2), DEFAULT_TOLERANCE).unwrap();
            assert!(rep.stationary, "{rep:?}");
            assert_eq!(rep.per_pair.len(), 2);
        }
    }

    #[test]
    fn w_tilted_basis_is_not_stationary() {
        let rep = check_optimality(&TripartiteState::w(), &MeasurementBasis::bloch(PI / 4.0, 0.0), DEFAULT_TOLERANCE).unwrap();
        assert!(!rep.stationary);
        assert!(rep.worst_residual > 1e-3);
    }

    #[test]
    fn eigenbasis_condition_for_fixtures() {
        for s in [TripartiteState::w(), TripartiteState::ghz()] {
            let rep = check_eigenbasis_condition(&s, 1e-8).unwrap();
            assert!(rep.stationary);
            assert_eq!(rep.per_pair.len(), 1);
        }
    }

    #[test]
    fn zero_probability_pairs_are_skipped() {
        let s = TripartiteState::product(Dims::new(2, 2, 3)).unwrap();
        let rep = check_optimality(&s, &MeasurementBasis::computational(3), DEFAULT_TOLERANCE).unwrap();
        assert!(rep.per_pair.is_empty());
        assert!(rep.stationary);
        assert_eq!(rep.worst_pair, None);
    }

    #[test]
    fn json_shape() {
        let rep = check_optimality(&TripartiteState::ghz(), &MeasurementBasis::computational(2), DEFAULT_TOLERANCE).unwrap();
        let v = rep.to_json();
        assert_eq!(v["stationary"], true);
        assert_eq!(v["pairs"][0]["kind"], "real");
        assert_eq!(v["pairs"][1]["kind"], "phase");
        assert!(v["worst_residual"].is_number());
    }
}
