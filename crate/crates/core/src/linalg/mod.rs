//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for the handful of qubits a weak-measurement
//! model needs (dimension ≤ 8 in normal use). Storage is dense row-major;
//! Hermitian eigenproblems are solved by cyclic Jacobi rotations, which keeps
//! eigenvalues accurate relative to the operator norm and makes
//! `exp(−iH) − I` available to full relative precision for tiny generators.

mod eigen;
mod matrix;
mod state;

pub mod pauli;

pub use eigen::{eig_hermitian, expm1_i_hermitian, expm_i_hermitian, Eigen, HermitianOperator};
pub(crate) use eigen::{phase, phase_m1};
pub use matrix::{kron, kron_vec, ComplexMatrix};
pub(crate) use state::inner;
pub use state::{partial_trace, partial_trace_matrix, DensityOperator, PureState, Subsystem};

pub use num_complex::Complex64;

/// Tolerances shared by every structural check.
pub mod tol {
    /// Hermiticity, normalization of state vectors, probability sums.
    pub const STRUCTURAL: f64 = 1e-12;
    /// Spectral checks: unitarity, traces, eigenvalue clamping.
    pub const SPECTRAL: f64 = 1e-10;
    /// Baseline probabilities at or below this are treated as zero.
    pub const PROBABILITY_FLOOR: f64 = 1e-15;
}
