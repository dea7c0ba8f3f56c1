use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use super::tol;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// A Hermitian operator on a finite-dimensional Hilbert space.
///
/// The stored matrix is exactly Hermitian: construction accepts inputs within
/// the structural tolerance and keeps their Hermitian part.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ContractViolation(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = matrix.hermiticity_defect();
        if defect > tol::STRUCTURAL {
            return Err(Error::ContractViolation(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let diag: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self {
            matrix: ComplexMatrix::from_diagonal(&diag),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(s),
        }
    }

    /// Sum of Hermitian operators of equal dimension.
    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    /// `a ⊗ b`, Hermitian whenever both factors are.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            matrix: super::kron(&self.matrix, &other.matrix),
        }
    }

    /// Spectral radius, which is the operator norm for Hermitian matrices.
    pub fn norm(&self) -> Result<f64> {
        let eig = eig_hermitian(self)?;
        Ok(eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

/// Eigenvalues in ascending order and the matching unitary eigenvector matrix
/// (eigenvectors are columns).
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// The `j`-th eigenvector as a column.
    pub fn vector(&self, j: usize) -> Vec<C64> {
        (0..self.vectors.rows()).map(|i| self.vectors[(i, j)]).collect()
    }

    /// `Σ_j f(λ_j) |v_j⟩⟨v_j|`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for r in 0..n {
                let vr = self.vectors[(r, j)] * w;
                for c in 0..n {
                    out[(r, c)] += vr * self.vectors[(c, j)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian operator by cyclic complex Jacobi
/// rotations.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::identity(n);

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if sweep > 3 && app.abs() + 100.0 * mag == app.abs() && aqq.abs() + 100.0 * mag == aqq.abs() {
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq / mag, app, aqq, mag);
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, src)];
        }
    }
    Ok(Eigen { values, vectors })
}

/// Applies `A ← W† A W`, `V ← V W` with the plane rotation that annihilates
/// `a[p][q]`, where `W = diag(1, e^{-iφ}) · [[c, s], [-s, c]]`.
#[allow(clippy::too_many_arguments)]
fn rotate(
    a: &mut ComplexMatrix,
    v: &mut ComplexMatrix,
    p: usize,
    q: usize,
    phase: C64,
    app: f64,
    aqq: f64,
    mag: f64,
) {
    let n = a.rows();
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let conj_phase = phase.conj();

    let w00 = C64::new(c, 0.0);
    let w01 = C64::new(s, 0.0);
    let w10 = -conj_phase * s;
    let w11 = conj_phase * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w00 + akq * w10;
        a[(k, q)] = akp * w01 + akq * w11;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w00.conj() * apk + w10.conj() * aqk;
        a[(q, k)] = w01.conj() * apk + w11.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w00 + vkq * w10;
        v[(k, q)] = vkp * w01 + vkq * w11;
    }
}

/// `e^{-ix}` for real `x`.
pub(crate) fn phase(x: f64) -> C64 {
    let (s, c) = x.sin_cos();
    C64::new(c, -s)
}

/// `e^{-ix} − 1` without cancellation for small `x`.
pub(crate) fn phase_m1(x: f64) -> C64 {
    let half = (0.5 * x).sin();
    C64::new(-2.0 * half * half, -x.sin())
}

/// `U = exp(−i·scale·H)`, computed from the eigendecomposition of `H`.
pub fn expm_i_hermitian(h: &HermitianOperator, scale: f64) -> Result<ComplexMatrix> {
    if scale == 0.0 {
        return Ok(ComplexMatrix::identity(h.dim()));
    }
    let eig = eig_hermitian(h)?;
    Ok(eig.map(|lambda| phase(scale * lambda)))
}

/// `exp(−i·scale·H) − I`, accurate relative to `|scale|·‖H‖` when that is small.
pub fn expm1_i_hermitian(h: &HermitianOperator, scale: f64) -> Result<ComplexMatrix> {
    if scale == 0.0 {
        return Ok(ComplexMatrix::zeros(h.dim(), h.dim()));
    }
    let eig = eig_hermitian(h)?;
    Ok(eig.map(|lambda| phase_m1(scale * lambda)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;

    fn taylor_expm(h: &ComplexMatrix, scale: f64, terms: usize) -> ComplexMatrix {
        let n = h.rows();
        let gen = h.scale(C64::new(0.0, -scale));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..terms {
            term = (&term * &gen).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    fn sample_hermitian() -> HermitianOperator {
        let raw = [
            (0.7, 0.0),
            (0.2, -0.4),
            (-0.3, 0.1),
            (0.05, 0.6),
            (0.2, 0.4),
            (-1.1, 0.0),
            (0.9, 0.3),
            (0.0, -0.2),
            (-0.3, -0.1),
            (0.9, -0.3),
            (0.4, 0.0),
            (0.35, 0.0),
            (0.05, -0.6),
            (0.0, 0.2),
            (0.35, 0.0),
            (-0.2, 0.0),
        ];
        let m = ComplexMatrix::new(4, 4, raw.iter().map(|&(r, i)| C64::new(r, i)).collect())
            .unwrap();
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(HermitianOperator::new(m).is_err());
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(HermitianOperator::new(rect).is_err());
    }

    #[test]
    fn pauli_z_spectrum() {
        let eig = eig_hermitian(&pauli::z()).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn pauli_x_spectrum_and_vectors() {
        let eig = eig_hermitian(&pauli::x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |−⟩ and |+⟩ up to a global phase
        let minus = [C64::new(s, 0.0), C64::new(-s, 0.0)];
        let plus = [C64::new(s, 0.0), C64::new(s, 0.0)];
        let overlap = |v: &[C64], w: &[C64]| -> f64 {
            v.iter().zip(w).map(|(a, b)| a.conj() * b).sum::<C64>().norm()
        };
        assert!((overlap(&eig.vector(0), &minus) - 1.0).abs() < 1e-14);
        assert!((overlap(&eig.vector(1), &plus) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_hermitian() {
        let h = sample_hermitian();
        let eig = eig_hermitian(&h).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let rebuilt = eig.map(|l| C64::new(l, 0.0));
        assert!(rebuilt.max_abs_diff(h.matrix()) < 1e-10);
        let vv = &eig.vectors.adjoint() * &eig.vectors;
        assert!(vv.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
        // H V = V diag(λ)
        let hv = h.matrix() * &eig.vectors;
        let vl = &eig.vectors
            * &ComplexMatrix::from_diagonal(
                &eig.values.iter().map(|&l| C64::new(l, 0.0)).collect::<Vec<_>>(),
            );
        assert!(hv.max_abs_diff(&vl) < 1e-10);
    }

    #[test]
    fn expm_scale_zero_is_identity() {
        let u = expm_i_hermitian(&sample_hermitian(), 0.0).unwrap();
        assert_eq!(u, ComplexMatrix::identity(4));
    }

    #[test]
    fn expm_of_z_quarter_turn() {
        let u = expm_i_hermitian(&pauli::z(), std::f64::consts::FRAC_PI_2).unwrap();
        let expected =
            ComplexMatrix::from_diagonal(&[C64::new(0.0, -1.0), C64::new(0.0, 1.0)]);
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_series() {
        let h = sample_hermitian();
        let u = expm_i_hermitian(&h, 0.3).unwrap();
        let series = taylor_expm(h.matrix(), 0.3, 40);
        assert!(u.max_abs_diff(&series) < 1e-10);
        let uu = &u.adjoint() * &u;
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
    }

    #[test]
    fn expm1_keeps_relative_accuracy_for_tiny_generators() {
        let h = sample_hermitian();
        let scale = 1e-9;
        let e = expm1_i_hermitian(&h, scale).unwrap();
        // first two Taylor terms are exact to O(scale^3)
        let first = h.matrix().scale(C64::new(0.0, -scale));
        let second = (h.matrix() * h.matrix()).scale_real(-0.5 * scale * scale);
        let series = &first + &second;
        let err = e.max_abs_diff(&series) / scale;
        assert!(err < 1e-14, "relative error {err:e}");
    }
}
