//! Dense quantum-state substrate.
//!
//! One global density matrix with a ledger of qubit owners, plus the Pauli and
//! Clifford algebra the authentication layer is built from. Sized for at most
//! [`MAX_QUBITS`] qubits; qubit 0 is the most significant tensor factor.

mod circuit;
mod clifford;
mod coins;
mod gates;
mod matrix;
mod pauli;
mod substrate;

use thiserror::Error;

pub use circuit::{Circuit, CircuitOp};
pub use clifford::{
    enumerate_clifford, sample_clifford, sample_clifford_walk, CliffordElement, CLIFFORD_1_ORDER, CLIFFORD_2_ORDER,
};
pub use coins::Coins;
pub use gates::{Gate, GateKind, GateList};
pub use matrix::{embed, hermitian_eigenvalues, is_unitary, trace_distance, trace_norm, DensityMatrix, Mat, C64};
pub use pauli::{Pauli, PauliString};
pub use substrate::{BasisState, InitBlock, Owner, QubitId, Substrate};

pub const MAX_QUBITS: usize = 12;

/// Numerical tolerances shared by the whole crate.
pub mod tol {
    /// Structural invariants: Hermiticity, trace, unitarity.
    pub const STRUCTURAL: f64 = 1e-10;
    /// State comparisons.
    pub const COMPARISON: f64 = 1e-9;
    /// Smallest eigenvalue still accepted as positive semidefinite.
    pub const PSD: f64 = 1e-9;
    /// Probability below which a measurement branch counts as impossible.
    pub const BRANCH: f64 = 1e-12;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("qubit budget exceeded: {requested} requested, at most {max}")]
    QubitBudget { requested: usize, max: usize },
    #[error("state is not normalized (trace {trace})")]
    NotNormalized { trace: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),
    #[error("qubit {0} referenced twice")]
    DuplicateQubit(QubitId),
    #[error("gate targets index {0} twice")]
    DuplicateTarget(usize),
    #[error("target index {index} outside a {width}-qubit register")]
    TargetOutOfRange { index: usize, width: usize },
    #[error("{gate} takes {expected} targets, got {got}")]
    ArityMismatch { gate: &'static str, expected: usize, got: usize },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("invalid Pauli string `{0}`")]
    InvalidPauli(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Clifford enumeration supports 1 or 2 qubits, not {0}")]
    UnsupportedCliffordSize(usize),
    #[error("measurement selected a zero-probability branch")]
    ZeroProbabilityBranch,
}
