//! Single-qubit Pauli operators and the states used throughout the examples.

use num_complex::Complex64 as C64;

use super::{ComplexMatrix, HermitianOperator, PureState};

fn op(entries: [C64; 4]) -> HermitianOperator {
    HermitianOperator::new(ComplexMatrix::from_vec_unchecked(2, 2, entries.to_vec()))
        .expect("Pauli matrices are Hermitian")
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> HermitianOperator {
    HermitianOperator::identity(2)
}

pub fn x() -> HermitianOperator {
    op([ZERO, ONE, ONE, ZERO])
}

pub fn y() -> HermitianOperator {
    op([ZERO, -I, I, ZERO])
}

pub fn z() -> HermitianOperator {
    op([ONE, ZERO, ZERO, -ONE])
}

/// `(|0⟩ + |1⟩)/√2`.
pub fn plus() -> PureState {
    PureState::from_real(&[1.0, 1.0]).expect("nonzero")
}

/// `(|0⟩ − |1⟩)/√2`.
pub fn minus() -> PureState {
    PureState::from_real(&[1.0, -1.0]).expect("nonzero")
}

/// `exp(−iασ)|ψ⟩` for a Pauli `σ`, using `cos α − i sin α σ`.
pub fn rotate(sigma: &HermitianOperator, angle: f64, psi: &PureState) -> PureState {
    let (s, c) = angle.sin_cos();
    let rotated = sigma.matrix().apply(psi.amplitudes());
    let amps = psi
        .amplitudes()
        .iter()
        .zip(rotated)
        .map(|(a, r)| a * c - I * s * r)
        .collect();
    PureState::normalized(amps).expect("rotation preserves norm")
}
