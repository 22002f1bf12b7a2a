//! Dense state-vector and density-matrix engine.
//!
//! Registers are ordered lists of labelled qubits. Qubit position 0 is the
//! most significant bit of the computational-basis index, so the ket
//! `|q0 q1 ... q(n-1)>` reads left to right. Operators acting on a subset of
//! the register take their own index with the first target as the most
//! significant bit.
//!
//! Conventions shared by the rest of the crate: spin `|g> = |0>`,
//! `|s> = |1>`; photon polarization `|H> = |0>`, `|V> = |1>`; photon
//! presence `|vac> = |0>`, `|1 photon> = |1>`.

mod channel;
pub mod gates;
mod kernel;
mod pauli;
mod register;
mod state;

pub use channel::{LossSplit, QuantumChannel};
pub use pauli::{Pauli, PauliString};
pub use register::{QubitKind, QubitLabel, Register};
pub use state::{Measurement, MeasurementResult, MixedState, Outcome, PureState};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Numerical tolerances used by every check in the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a pure state's norm from one.
    pub normalization: f64,
    /// Allowed entrywise deviation of `rho - rho^dagger`.
    pub hermiticity: f64,
    /// Allowed deviation of `Tr(rho)` from one.
    pub trace: f64,
    /// Smallest eigenvalue accepted for a density matrix.
    pub eigenvalue_floor: f64,
    /// Allowed entrywise deviation of `sum K^dagger K` (or `sum P`) from identity.
    pub completeness: f64,
    /// Probabilities below this are treated as zero when forcing an outcome.
    pub degenerate_probability: f64,
    /// Largest register the dense engine accepts.
    pub max_qubits: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        normalization: 1e-12,
        hermiticity: 1e-12,
        trace: 1e-12,
        eigenvalue_floor: -1e-10,
        completeness: 1e-10,
        degenerate_probability: 1e-14,
        max_qubits: 14,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub const TOL: Tolerances = Tolerances::DEFAULT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("qubit id {0} appears more than once")]
    DuplicateLabel(u32),
    #[error("qubit id {0} is not in the register")]
    UnknownLabel(u32),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("register of {requested} qubits exceeds the cap of {cap}")]
    QubitCap { requested: usize, cap: usize },
    #[error("state norm deviates from one by {0:e}")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace deviates from one by {0:e}")]
    NotUnitTrace(f64),
    #[error("matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("operator set is not trace preserving (max deviation {0:e})")]
    NotTracePreserving(f64),
    #[error("operator set is empty")]
    EmptyChannel,
    #[error("projectors are not a complete orthogonal set (max deviation {0:e})")]
    IncompleteProjectors(f64),
    #[error("outcome {outcome} has probability {probability:e}")]
    DegenerateOutcome { outcome: usize, probability: f64 },
    #[error("outcome index {0} out of range")]
    OutcomeOutOfRange(usize),
    #[error("cannot trace out the entire register")]
    DiscardAll,
    #[error("malformed Pauli string: {0}")]
    MalformedPauli(String),
}

pub type Result<T> = std::result::Result<T, QsimError>;

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
