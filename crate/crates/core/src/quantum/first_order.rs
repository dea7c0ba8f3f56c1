use log::warn;
use num_complex::Complex64 as C64;

use super::WeakMeasurementSetup;
use crate::error::{Error, Result};
use crate::estimation::{OutcomeDistribution, ParametricModel};
use crate::linalg::{tol, ComplexMatrix, DensityOperator, HermitianOperator, PureState};

const PERTURBATIVE_LIMIT: f64 = 1e-2;
const I: C64 = C64::new(0.0, 1.0);

/// Anything that carries a probe density matrix to be measured.
pub trait ProbeDensity {
    fn density_matrix(&self) -> &ComplexMatrix;
}

impl ProbeDensity for DensityOperator {
    fn density_matrix(&self) -> &ComplexMatrix {
        self.matrix()
    }
}

/// Probe state from a first-order expansion: Hermitian with unit trace, but
/// possibly negative at second order in the coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderState {
    matrix: ComplexMatrix,
}

impl FirstOrderState {
    fn new(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(crate::linalg::eig_hermitian(&HermitianOperator::new(self.matrix.clone())?)?.values[0])
    }

    /// Clamps and renormalizes into a density operator; fails when the
    /// negativity exceeds 1e-10.
    pub fn to_density(&self) -> Result<DensityOperator> {
        Ok(DensityOperator::clamped(&self.matrix)?.0)
    }

    /// `½‖ρ₁ − ρ‖₁` against an exact state.
    pub fn trace_distance(&self, exact: &DensityOperator) -> Result<f64> {
        let diff = HermitianOperator::new(&self.matrix - exact.matrix())?;
        let eig = crate::linalg::eig_hermitian(&diff)?;
        Ok(0.5 * eig.values.iter().map(|l| l.abs()).sum::<f64>())
    }
}

impl ProbeDensity for FirstOrderState {
    fn density_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// `p_k = ⟨k|ρ|k⟩`, clamped at zero and renormalized. Negativity or
/// normalization drift beyond 1e-10 is an error.
pub fn measurement_distribution(
    state: &impl ProbeDensity,
    basis: &[PureState],
) -> Result<OutcomeDistribution> {
    let rho = state.density_matrix();
    let mut p = Vec::with_capacity(basis.len());
    for (k, v) in basis.iter().enumerate() {
        if v.dim() != rho.rows() {
            return Err(Error::ContractViolation("basis dimension mismatch".into()));
        }
        let pk = rho.sandwich(v.amplitudes(), v.amplitudes()).re;
        if pk < -tol::SPECTRAL {
            return Err(Error::InvalidState(format!("outcome {k} has probability {pk:e}")));
        }
        p.push(pk.max(0.0));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol::SPECTRAL {
        return Err(Error::InvalidState(format!("outcome probabilities sum to {total}")));
    }
    OutcomeDistribution::new(p.into_iter().map(|x| x / total).collect())
}

/// Per-outcome probe weak values `G_w^(k) = ⟨k|G ρ_D|k⟩ / ⟨k|ρ_D|k⟩` and
/// `H′_Dw^(k)` likewise, over outcomes with `⟨k|ρ_D|k⟩` above the
/// probability floor.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeWeakValues {
    /// Indices into the probe basis of the retained outcomes.
    pub outcomes: Vec<usize>,
    /// `⟨k|ρ_D|k⟩`.
    pub baseline: Vec<f64>,
    /// `G_w^(k)`.
    pub observable: Vec<C64>,
    /// `H′_Dw^(k)`.
    pub decoherence: Vec<C64>,
}

pub fn probe_weak_values(setup: &WeakMeasurementSetup) -> Result<ProbeWeakValues> {
    let rho = setup.probe().matrix();
    let g_rho = setup.probe_observable().matrix() * rho;
    let h_rho = setup.decoherence_operator().matrix() * rho;
    let mut out = ProbeWeakValues {
        outcomes: Vec::new(),
        baseline: Vec::new(),
        observable: Vec::new(),
        decoherence: Vec::new(),
    };
    for (k, v) in setup.probe_basis().iter().enumerate() {
        let a = v.amplitudes();
        let r = rho.sandwich(a, a).re;
        if r <= tol::PROBABILITY_FLOOR {
            continue;
        }
        out.outcomes.push(k);
        out.baseline.push(r);
        out.observable.push(g_rho.sandwich(a, a) / r);
        out.decoherence.push(h_rho.sandwich(a, a) / r);
    }
    if out.outcomes.is_empty() {
        return Err(Error::DegenerateProbe);
    }
    Ok(out)
}

/// Unnormalized first-order probe state `ρ(g) = zeroth + g·slope`.
#[derive(Clone, Debug)]
pub struct LinearProbeState {
    pub zeroth: ComplexMatrix,
    pub slope: ComplexMatrix,
}

/// Without postselection: `ρ_D − i g ⟨A⟩_i [G, ρ_D]`.
pub fn standard_terms(setup: &WeakMeasurementSetup) -> LinearProbeState {
    let rho = setup.probe().matrix();
    let comm = setup.probe_observable().matrix().commutator(rho);
    LinearProbeState {
        zeroth: rho.clone(),
        slope: comm.scale(-I * setup.expectation_a()),
    }
}

/// With postselection: `P_f (ρ_D − i g Re A_w [G, ρ_D] + g Im A_w {G, ρ_D})`
/// with `P_f = ⟨ψ_f|ρ_S|ψ_f⟩`.
pub fn postselected_terms(setup: &WeakMeasurementSetup) -> Result<LinearProbeState> {
    let aw = setup.weak_value()?;
    let pf = setup.postselection_probability()?;
    let rho = setup.probe().matrix();
    let g = setup.probe_observable().matrix();
    let slope = &g.commutator(rho).scale(-I * aw.re) + &g.anticommutator(rho).scale_real(aw.im);
    Ok(LinearProbeState {
        zeroth: rho.scale_real(pf),
        slope: slope.scale_real(pf),
    })
}

/// `−i ε_D t [H′_D, ρ_D]`.
pub fn decoherence_term(setup: &WeakMeasurementSetup) -> ComplexMatrix {
    let rho = setup.probe().matrix();
    setup
        .decoherence_operator()
        .matrix()
        .commutator(rho)
        .scale(-I * setup.decoherence_scale())
}

fn warn_if_strong(what: &str, size: f64) {
    if size > PERTURBATIVE_LIMIT {
        warn!("{what} = {size:e} is outside the first-order regime");
    }
}

fn coupling_size(setup: &WeakMeasurementSetup, g: f64) -> f64 {
    let a = setup.system_observable().norm().unwrap_or(f64::NAN);
    let gn = setup.probe_observable().norm().unwrap_or(f64::NAN);
    g.abs() * a * gn
}

/// First-order probe state without postselection.
pub fn probe_state_standard_first_order(setup: &WeakMeasurementSetup, g: f64) -> FirstOrderState {
    warn_if_strong("g·‖A‖·‖G‖", coupling_size(setup, g));
    let t = standard_terms(setup);
    FirstOrderState::new(&t.zeroth + &t.slope.scale_real(g))
}

/// First-order postselected probe state, renormalized, and the first-order
/// postselection probability.
pub fn probe_state_postselected_first_order(
    setup: &WeakMeasurementSetup,
    g: f64,
) -> Result<(FirstOrderState, f64)> {
    warn_if_strong("g·‖A‖·‖G‖", coupling_size(setup, g));
    let t = postselected_terms(setup)?;
    let unnormalized = &t.zeroth + &t.slope.scale_real(g);
    let prob = unnormalized.trace().re;
    if !(prob > tol::PROBABILITY_FLOOR) {
        return Err(Error::DegeneratePostselection {
            overlap: prob.max(0.0).sqrt(),
        });
    }
    Ok((FirstOrderState::new(unnormalized.scale_real(1.0 / prob)), prob))
}

/// Adds the first-order decoherence term `−i ε_D t [H′_D, ρ_D]`.
pub fn apply_probe_decoherence_first_order(
    state: &FirstOrderState,
    setup: &WeakMeasurementSetup,
) -> FirstOrderState {
    let size = setup.decoherence_scale() * setup.decoherence_operator().norm().unwrap_or(f64::NAN);
    warn_if_strong("ε_D·t·‖H′_D‖", size);
    if setup.decoherence_scale() == 0.0 {
        return state.clone();
    }
    FirstOrderState::new(state.matrix() + &decoherence_term(setup))
}

/// First-order shift of `⟨M⟩` on the postselected probe,
/// `g Im A_w (⟨{G,M}⟩ − 2⟨G⟩⟨M⟩) + i g Re A_w ⟨[G,M]⟩`.
pub fn pointer_shift_first_order(
    setup: &WeakMeasurementSetup,
    measured: &HermitianOperator,
    g: f64,
) -> Result<f64> {
    if measured.dim() != setup.probe().dim() {
        return Err(Error::ContractViolation("measured operator dimension mismatch".into()));
    }
    let aw = setup.weak_value()?;
    let rho = setup.probe().matrix();
    let gm = setup.probe_observable().matrix();
    let m = measured.matrix();
    let expect = |x: &ComplexMatrix| (x * rho).trace();
    let anti = expect(&gm.anticommutator(m)).re;
    let comm = expect(&gm.commutator(m));
    let mean_g = expect(gm).re;
    let mean_m = expect(m).re;
    let rotation = I * aw.re * comm;
    let scale = aw.norm() * (comm.norm() + 1.0);
    if rotation.im.abs() > tol::STRUCTURAL * scale {
        return Err(Error::NumericalFailure(format!(
            "pointer shift has imaginary part {:e}",
            rotation.im
        )));
    }
    Ok(g * (aw.im * (anti - 2.0 * mean_g * mean_m) + rotation.re))
}

/// Outcome model implied by a first-order probe state,
/// `p_k(g) = (b_k + g s_k) / Σ_j (b_j + g s_j)`.
#[derive(Clone, Debug)]
pub struct FirstOrderModel {
    base: Vec<f64>,
    slope: Vec<f64>,
    base_total: f64,
    slope_total: f64,
}

impl FirstOrderModel {
    pub fn from_terms(terms: &LinearProbeState, basis: &[PureState]) -> Self {
        let diag = |m: &ComplexMatrix| -> Vec<f64> {
            basis
                .iter()
                .map(|k| m.sandwich(k.amplitudes(), k.amplitudes()).re)
                .collect()
        };
        let base = diag(&terms.zeroth);
        let slope = diag(&terms.slope);
        Self {
            base_total: base.iter().sum(),
            slope_total: slope.iter().sum(),
            base,
            slope,
        }
    }

    pub fn standard(setup: &WeakMeasurementSetup) -> Self {
        Self::from_terms(&standard_terms(setup), setup.probe_basis())
    }

    pub fn postselected(setup: &WeakMeasurementSetup) -> Result<Self> {
        Ok(Self::from_terms(&postselected_terms(setup)?, setup.probe_basis()))
    }

    fn total(&self, g: f64) -> f64 {
        self.base_total + g * self.slope_total
    }
}

/// Outcome shift `⟨k|−i ε_D t [H′_D, ρ_D]|k⟩` caused by first-order
/// decoherence.
pub fn first_order_deviation(setup: &WeakMeasurementSetup) -> Vec<f64> {
    let d = decoherence_term(setup);
    setup
        .probe_basis()
        .iter()
        .map(|k| d.sandwich(k.amplitudes(), k.amplitudes()).re)
        .collect()
}

impl ParametricModel for FirstOrderModel {
    fn outcome_count(&self) -> usize {
        self.base.len()
    }

    fn distribution(&self, g: f64) -> Result<OutcomeDistribution> {
        let total = self.total(g);
        let mut p = Vec::with_capacity(self.base.len());
        for (k, (b, s)) in self.base.iter().zip(&self.slope).enumerate() {
            let pk = (b + g * s) / total;
            if !(pk >= -tol::SPECTRAL) {
                return Err(Error::InvalidState(format!(
                    "first-order probability {pk:e} for outcome {k} at g = {g:e}"
                )));
            }
            p.push(pk.max(0.0));
        }
        OutcomeDistribution::new(p)
    }

    fn increment(&self, g: f64, step: f64) -> Result<Vec<f64>> {
        let (t0, t1) = (self.total(g), self.total(g + step));
        Ok(self
            .base
            .iter()
            .zip(&self.slope)
            .map(|(b, s)| step * (s * self.base_total - b * self.slope_total) / (t0 * t1))
            .collect())
    }

    fn derivative(&self, g: f64) -> Result<Vec<f64>> {
        let t = self.total(g);
        Ok(self
            .base
            .iter()
            .zip(&self.slope)
            .map(|(b, s)| (s * self.base_total - b * self.slope_total) / (t * t))
            .collect())
    }
}
