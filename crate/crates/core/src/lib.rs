//! Optimal bipartite entanglement in tripartite pure states.
//!
//! A projective measurement on part C of a pure state `|Ψ⟩` on `A⊗B⊗C`
//! leaves `S = A⊗B` in an ensemble of pure states; the ensemble's average
//! entanglement entropy `S̄` depends on the measurement basis. This crate
//! evaluates `S̄`, its first-order change under a rotation of two basis
//! vectors, the resulting stationarity condition, and optimizes over bases to
//! obtain the entanglement of formation (minimum) and of assistance
//! (maximum). Bipartite mixed states are handled by purification, with an
//! optional ancilla enlarging the measured part.

pub mod analytic;
pub mod ancilla;
pub mod error;
pub mod format;
pub mod linalg;
pub mod measurement;
pub mod optimality;
pub mod optimizer;
pub mod perturbation;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use measurement::{average_entropy, decompose, Decomposition, MeasurementBasis};
pub use states::{DensityMatrix, Dims, Part, TripartiteState};
