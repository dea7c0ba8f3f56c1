use num_complex::Complex64 as C64;

use super::eigen::{eig_hermitian, Eigen, HermitianOperator};
use super::matrix::{kron_vec, ComplexMatrix};
use super::tol;
use crate::error::{Error, Result};

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized to within 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ContractViolation("state vector must be non-empty".into()));
        }
        let norm = l2(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > tol::STRUCTURAL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = l2(&amplitudes);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// All computational basis vectors of dimension `dim`.
    pub fn computational_basis(dim: usize) -> Vec<Self> {
        (0..dim).map(|i| Self::basis(dim, i)).collect()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn kron(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    /// `U|ψ⟩` for a unitary `U`, renormalized against rounding.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<PureState> {
        PureState::normalized(unitary.apply(&self.amplitudes))
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, h: &HermitianOperator) -> f64 {
        h.matrix().sandwich(&self.amplitudes, &self.amplitudes).re
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

pub(crate) fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Density operator: Hermitian, unit trace, positive semidefinite (all within
/// tolerance).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density operator must be square".into()));
        }
        let defect = matrix.hermiticity_defect();
        if defect > tol::STRUCTURAL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol::SPECTRAL {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let matrix = matrix.hermitian_part();
        let min = min_eigenvalue(&matrix)?;
        if min < -tol::SPECTRAL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: psi.projector().hermitian_part(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Repairs a matrix that should be a density operator up to small
    /// truncation errors: negative eigenvalues are clamped to zero and the
    /// trace renormalized. Returns the state and the clamped magnitude.
    /// Clamping beyond 1e-10 is an error.
    pub fn clamped(matrix: &ComplexMatrix) -> Result<(Self, f64)> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density operator must be square".into()));
        }
        let defect = matrix.hermiticity_defect();
        if defect > tol::STRUCTURAL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let trace = matrix.trace().re;
        if !(trace > 0.0) {
            return Err(Error::InvalidState(format!("non-positive trace {trace}")));
        }
        let h = HermitianOperator::new(matrix.scale_real(1.0 / trace))?;
        let eig = eig_hermitian(&h)?;
        let clamp = eig.values.iter().fold(0.0_f64, |m, &l| m.max(-l));
        if clamp > tol::SPECTRAL {
            return Err(Error::InvalidState(format!(
                "eigenvalue {:e} needs clamping beyond tolerance",
                -clamp
            )));
        }
        if clamp == 0.0 {
            return Ok((Self { matrix: h.matrix().clone() }, 0.0));
        }
        let total: f64 = eig.values.iter().map(|&l| l.max(0.0)).sum();
        let repaired = eig.map(|l| C64::new(l.max(0.0) / total, 0.0)).hermitian_part();
        Ok((Self { matrix: repaired }, clamp))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `Tr(Hρ)`.
    pub fn expectation(&self, h: &HermitianOperator) -> f64 {
        (h.matrix() * &self.matrix).trace().re
    }

    /// `⟨v|ρ|v⟩`.
    pub fn population(&self, v: &PureState) -> f64 {
        self.matrix.sandwich(v.amplitudes(), v.amplitudes()).re
    }

    pub fn kron(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: super::kron(&self.matrix, &other.matrix),
        }
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.matrix)
    }

    pub fn eigen(&self) -> Result<Eigen> {
        eig_hermitian(&HermitianOperator::new(self.matrix.clone())?)
    }

    /// Purity `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        let diff = HermitianOperator::new(&self.matrix - &other.matrix)?;
        let eig = eig_hermitian(&diff)?;
        Ok(0.5 * eig.values.iter().map(|l| l.abs()).sum::<f64>())
    }
}

fn min_eigenvalue(matrix: &ComplexMatrix) -> Result<f64> {
    let eig = eig_hermitian(&HermitianOperator::new(matrix.hermitian_part())?)?;
    Ok(eig.values[0])
}

/// Which tensor factor of a bipartite space to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of a bipartite matrix over the factor that is not kept.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    (dim_a, dim_b): (usize, usize),
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    if !m.is_square() || m.rows() != dim_a * dim_b {
        return Err(Error::ContractViolation(format!(
            "matrix of size {}x{} does not factor as {dim_a}x{dim_b}",
            m.rows(),
            m.cols()
        )));
    }
    let out = match keep {
        Subsystem::First => {
            let mut out = ComplexMatrix::zeros(dim_a, dim_a);
            for i in 0..dim_a {
                for j in 0..dim_a {
                    out[(i, j)] = (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum();
                }
            }
            out
        }
        Subsystem::Second => {
            let mut out = ComplexMatrix::zeros(dim_b, dim_b);
            for k in 0..dim_b {
                for l in 0..dim_b {
                    out[(k, l)] = (0..dim_a).map(|i| m[(i * dim_b + k, i * dim_b + l)]).sum();
                }
            }
            out
        }
    };
    Ok(out)
}

/// Reduced density operator of one factor of a bipartite state.
pub fn partial_trace(
    rho: &DensityOperator,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<DensityOperator> {
    let reduced = partial_trace_matrix(rho.matrix(), dims, keep)?;
    DensityOperator::new(reduced)
}
