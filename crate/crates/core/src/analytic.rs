//! Closed forms for the W and GHZ states measured in a Bloch basis on C.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// A point on the Bloch sphere, `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochPoint {
    theta: f64,
    phi: f64,
}

impl BlochPoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta {theta} outside [0, π]")));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::InvalidArgument(format!("phi {phi} outside [0, 2π)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Binary entropy of `{λ, 1 − λ}` written out for a two-level spectrum, `0·log₂0 = 0`.
fn entropy2(plus: f64, minus: f64) -> f64 {
    [plus, minus].iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WBranchData {
    pub p1: f64,
    pub p2: f64,
    pub lambda_plus1: f64,
    pub lambda_minus1: f64,
    pub lambda_plus2: f64,
    pub lambda_minus2: f64,
    pub s1: f64,
    pub s2: f64,
    pub avg: f64,
}

/// Branch probabilities, RDM eigenvalues, and entropies of the W state
/// measured in the Bloch basis at `p`. Independent of φ.
pub fn w_branch_data(p: BlochPoint) -> WBranchData {
    w_data_at(p.theta)
}

// Also valid (and even) for θ slightly outside [0, π].
fn w_data_at(theta: f64) -> WBranchData {
    let c2 = (theta / 2.0).cos().powi(2);
    let s2 = (theta / 2.0).sin().powi(2);
    let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let split1 = s / (1.0 + c2) * (1.0 + 3.0 * c2).sqrt();
    let split2 = c / (1.0 + s2) * (1.0 + 3.0 * s2).sqrt();
    let lambda_plus1 = 0.5 * (1.0 + split1);
    let lambda_minus1 = 0.5 * (1.0 - split1);
    let lambda_plus2 = 0.5 * (1.0 + split2);
    let lambda_minus2 = 0.5 * (1.0 - split2);
    let p1 = (1.0 + c2) / 3.0;
    let p2 = (1.0 + s2) / 3.0;
    let s1 = entropy2(lambda_plus1, lambda_minus1);
    let s2e = entropy2(lambda_plus2, lambda_minus2);
    WBranchData {
        p1,
        p2,
        lambda_plus1,
        lambda_minus1,
        lambda_plus2,
        lambda_minus2,
        s1,
        s2: s2e,
        avg: p1 * s1 + p2 * s2e,
    }
}

/// Average entropy of the GHZ state measured in the Bloch basis at `p`:
/// the binary entropy of `cos²(θ/2)`. Both branches have probability ½.
pub fn ghz_avg_entropy(p: BlochPoint) -> f64 {
    ghz_avg_at(p.theta)
}

fn ghz_avg_at(theta: f64) -> f64 {
    let c2 = (theta / 2.0).cos().powi(2);
    let s2 = (theta / 2.0).sin().powi(2);
    let (p1, p2) = (0.5, 0.5);
    p1 * entropy2(c2, s2) + p2 * entropy2(s2, c2)
}

/// Exact optimal values for the two fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactConstants {
    pub w_ea: f64,
    pub w_ef: f64,
    pub ghz_ef: f64,
    pub ghz_ea: f64,
}

pub fn exact_constants() -> ExactConstants {
    let sqrt5 = 5f64.sqrt();
    ExactConstants {
        w_ea: 2.0 / 3.0,
        w_ef: 3f64.log2() - sqrt5 / 3.0 * ((3.0 + sqrt5) / 2.0).log2(),
        ghz_ef: 0.0,
        ghz_ea: 1.0,
    }
}
