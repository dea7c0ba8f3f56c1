//! Exact evolution under `exp(−i (g A⊗G + ε_D t I⊗H′_D))` and the outcome
//! model it induces.

use num_complex::Complex64 as C64;

use super::setup::ensemble_of;
use super::WeakMeasurementSetup;
use crate::error::{Error, Result};
use crate::estimation::{OutcomeDistribution, ParametricModel};
use crate::linalg::{
    eig_hermitian, expm1_i_hermitian, expm_i_hermitian, inner, kron, kron_vec, partial_trace_matrix, phase,
    phase_m1, tol, ComplexMatrix, DensityOperator, HermitianOperator, PureState, Subsystem,
};

/// Generator `g A⊗G + ε_D t I⊗H′_D` on system ⊗ probe.
pub fn joint_generator(setup: &WeakMeasurementSetup, g: f64) -> HermitianOperator {
    let coupling = setup.system_observable().kron(setup.probe_observable()).scale(g);
    let ds = setup.system().dim();
    let decoherence = HermitianOperator::identity(ds)
        .kron(setup.decoherence_operator())
        .scale(setup.decoherence_scale());
    coupling.add(&decoherence)
}

fn evolved_joint(setup: &WeakMeasurementSetup, g: f64, with_decoherence: bool) -> Result<ComplexMatrix> {
    let generator = if with_decoherence {
        joint_generator(setup, g)
    } else {
        setup.system_observable().kron(setup.probe_observable()).scale(g)
    };
    let u = expm_i_hermitian(&generator, 1.0)?;
    let rho0 = kron(setup.system().density().matrix(), setup.probe().matrix());
    Ok(&(&u * &rho0) * &u.adjoint())
}

/// Reduced probe state after the exact joint evolution.
pub fn probe_state_standard_exact(setup: &WeakMeasurementSetup, g: f64) -> Result<DensityOperator> {
    let joint = evolved_joint(setup, g, true)?;
    let dims = (setup.system().dim(), setup.probe().dim());
    DensityOperator::new(partial_trace_matrix(&joint, dims, Subsystem::Second)?.hermitian_part())
}

fn postselect(joint: &ComplexMatrix, psi_f: &PureState, dp: usize) -> ComplexMatrix {
    let f = psi_f.amplitudes();
    let ds = f.len();
    let mut out = ComplexMatrix::zeros(dp, dp);
    for k in 0..dp {
        for l in 0..dp {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..ds {
                for t in 0..ds {
                    acc += f[s].conj() * joint[(s * dp + k, t * dp + l)] * f[t];
                }
            }
            out[(k, l)] = acc;
        }
    }
    out
}

fn postselected_exact(
    setup: &WeakMeasurementSetup,
    g: f64,
    with_decoherence: bool,
) -> Result<(DensityOperator, f64)> {
    let psi_f = setup.require_postselection()?;
    let joint = evolved_joint(setup, g, with_decoherence)?;
    let unnormalized = postselect(&joint, psi_f, setup.probe().dim());
    let prob = unnormalized.trace().re;
    if !(prob > tol::PROBABILITY_FLOOR) {
        return Err(Error::DegeneratePostselection {
            overlap: prob.max(0.0).sqrt(),
        });
    }
    let state = DensityOperator::new(unnormalized.scale_real(1.0 / prob).hermitian_part())?;
    Ok((state, prob))
}

/// Conditional probe state after exact evolution and postselection, with
/// the postselection probability.
pub fn probe_state_postselected_exact(setup: &WeakMeasurementSetup, g: f64) -> Result<(DensityOperator, f64)> {
    postselected_exact(setup, g, true)
}

/// Exact shift `Tr(M ρ_f) − Tr(M ρ_D)` of the postselected probe without
/// decoherence.
pub fn pointer_shift_exact(setup: &WeakMeasurementSetup, measured: &HermitianOperator, g: f64) -> Result<f64> {
    let (state, _) = postselected_exact(setup, g, false)?;
    Ok(state.expectation(measured) - setup.probe().expectation(measured))
}

/// Extra generator `B` evolved alongside the coupling, `exp(−i(gK + B))`,
/// with a mixture weight.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    pub generator: HermitianOperator,
}

/// The setup's decoherence as a single branch (none when `ε_D t = 0`).
pub fn decoherence_branches(setup: &WeakMeasurementSetup) -> Vec<Branch> {
    if setup.decoherence_scale() == 0.0 {
        return Vec::new();
    }
    let ds = setup.system().dim();
    vec![Branch {
        weight: 1.0,
        generator: HermitianOperator::identity(ds)
            .kron(setup.decoherence_operator())
            .scale(setup.decoherence_scale()),
    }]
}

#[derive(Clone, Debug)]
struct Channel {
    weight: f64,
    measured: Vec<C64>,
    initial: Vec<C64>,
    /// `⟨m|v_j⟩⟨v_j|φ⟩` over the coupling eigenbasis.
    coef: Vec<C64>,
}

impl Channel {
    fn amplitude(&self, values: &[f64], g: f64) -> C64 {
        self.coef.iter().zip(values).map(|(c, l)| c * phase(g * l)).sum()
    }
}

/// Deviation of a branch mixture from the ideal model at `g0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Deviation {
    /// `q_k = p^expt_k − p_k(g0)`.
    pub q: Vec<f64>,
    /// Unnormalized outcome mass of the ideal model (postselection
    /// probability, or 1 without postselection).
    pub reference_mass: f64,
    /// Same for the branch mixture.
    pub expt_mass: f64,
}

/// Outcome model of the unitary coupling `exp(−i g K)`:
/// `π_k(g) = Σ_a w_a Σ_{m ∈ M_k} |⟨m|e^{−igK}|φ_a⟩|²`, `p_k = π_k / Σ_j π_j`.
///
/// Amplitudes are evaluated in the eigenbasis of `K`, so increments
/// `p(g + h) − p(g)` come from `e^{−ihλ} − 1` factors and keep full
/// relative precision for tiny `h`.
#[derive(Clone, Debug)]
pub struct CouplingModel {
    coupling: HermitianOperator,
    values: Vec<f64>,
    outcomes: Vec<Vec<Channel>>,
}

impl CouplingModel {
    /// `ensemble`: weighted initial joint vectors; `outcomes[k]`: the joint
    /// vectors whose populations add up to outcome `k`.
    pub fn new(
        coupling: HermitianOperator,
        ensemble: Vec<(f64, Vec<C64>)>,
        outcomes: Vec<Vec<Vec<C64>>>,
    ) -> Result<Self> {
        let n = coupling.dim();
        if ensemble.iter().any(|(_, v)| v.len() != n) || outcomes.iter().flatten().any(|m| m.len() != n) {
            return Err(Error::ContractViolation("coupling model vector dimension mismatch".into()));
        }
        if outcomes.is_empty() {
            return Err(Error::ContractViolation("coupling model needs outcomes".into()));
        }
        let eig = eig_hermitian(&coupling)?;
        let vectors: Vec<Vec<C64>> = (0..n).map(|j| eig.vector(j)).collect();
        let outcomes = outcomes
            .into_iter()
            .map(|ms| {
                ms.iter()
                    .flat_map(|m| {
                        ensemble.iter().map(|(w, phi)| Channel {
                            weight: *w,
                            measured: m.clone(),
                            initial: phi.clone(),
                            coef: vectors.iter().map(|v| inner(m, v) * inner(v, phi)).collect(),
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            coupling,
            values: eig.values,
            outcomes,
        })
    }

    fn setup_ensemble(setup: &WeakMeasurementSetup) -> Result<Vec<(f64, Vec<C64>)>> {
        let sys = setup.system().ensemble()?;
        let probe = ensemble_of(setup.probe())?;
        Ok(sys
            .iter()
            .flat_map(|(ws, s)| probe.iter().map(move |(wp, d)| (ws * wp, kron_vec(s, d))))
            .collect())
    }

    fn coupling_of(setup: &WeakMeasurementSetup) -> HermitianOperator {
        setup.system_observable().kron(setup.probe_observable())
    }

    /// Probe measured without postselection (system traced out).
    pub fn standard(setup: &WeakMeasurementSetup) -> Result<Self> {
        let ds = setup.system().dim();
        let outcomes = setup
            .probe_basis()
            .iter()
            .map(|k| {
                PureState::computational_basis(ds)
                    .iter()
                    .map(|s| kron_vec(s.amplitudes(), k.amplitudes()))
                    .collect()
            })
            .collect();
        Self::new(Self::coupling_of(setup), Self::setup_ensemble(setup)?, outcomes)
    }

    /// Probe measured after successful postselection, renormalized.
    pub fn postselected(setup: &WeakMeasurementSetup) -> Result<Self> {
        let f = setup.require_postselection()?;
        let outcomes = setup
            .probe_basis()
            .iter()
            .map(|k| vec![kron_vec(f.amplitudes(), k.amplitudes())])
            .collect();
        Self::new(Self::coupling_of(setup), Self::setup_ensemble(setup)?, outcomes)
    }

    /// Unnormalized outcome masses `π_k(g)`.
    pub fn masses(&self, g: f64) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|chs| chs.iter().map(|c| c.weight * c.amplitude(&self.values, g).norm_sqr()).sum())
            .collect()
    }

    /// `Σ_k π_k(g)`: the postselection probability, or 1 without one.
    pub fn total_mass(&self, g: f64) -> f64 {
        self.masses(g).iter().sum()
    }

    fn mass_increments(&self, g: f64, h: f64) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|chs| {
                chs.iter()
                    .map(|c| {
                        let mut amp = C64::new(0.0, 0.0);
                        let mut delta = C64::new(0.0, 0.0);
                        for (coef, l) in c.coef.iter().zip(&self.values) {
                            let a = coef * phase(g * l);
                            amp += a;
                            delta += a * phase_m1(h * l);
                        }
                        c.weight * (2.0 * (amp.conj() * delta).re + delta.norm_sqr())
                    })
                    .sum()
            })
            .collect()
    }

    /// `p^expt − p(g0)` for the mixture of branches `exp(−i(g0 K + B_n))`
    /// with weights normalized to one. Each branch enters through
    /// `(e^{−i(g0K+B)} − I) − (e^{−ig0K} − I)`, so `q` keeps full relative
    /// precision when the `B_n` are small.
    pub fn deviation(&self, g0: f64, branches: &[Branch]) -> Result<Deviation> {
        let masses = self.masses(g0);
        let reference_mass: f64 = masses.iter().sum();
        let total_weight: f64 = branches.iter().map(|b| b.weight).sum();
        let mut d_mass = vec![0.0; masses.len()];
        let active: Vec<&Branch> = branches
            .iter()
            .filter(|b| b.weight != 0.0 && b.generator.matrix().max_abs() != 0.0)
            .collect();
        if !active.is_empty() {
            if !(total_weight > 0.0) {
                return Err(Error::InvalidParameter("branch weights must sum to a positive value".into()));
            }
            let ideal_m1 = expm1_i_hermitian(&self.coupling, g0)?;
            for b in active {
                if b.generator.dim() != self.coupling.dim() {
                    return Err(Error::ContractViolation("branch generator dimension mismatch".into()));
                }
                let full = self.coupling.scale(g0).add(&b.generator);
                let diff = &expm1_i_hermitian(&full, 1.0)? - &ideal_m1;
                let w = b.weight / total_weight;
                for (k, chs) in self.outcomes.iter().enumerate() {
                    for c in chs {
                        let amp = c.amplitude(&self.values, g0);
                        let delta = diff.sandwich(&c.measured, &c.initial);
                        d_mass[k] += w * c.weight * (2.0 * (amp.conj() * delta).re + delta.norm_sqr());
                    }
                }
            }
        }
        let d_total: f64 = d_mass.iter().sum();
        let expt_mass = reference_mass + d_total;
        let q = masses
            .iter()
            .zip(&d_mass)
            .map(|(m, dm)| (dm * reference_mass - m * d_total) / (reference_mass * expt_mass))
            .collect();
        Ok(Deviation {
            q,
            reference_mass,
            expt_mass,
        })
    }
}

impl ParametricModel for CouplingModel {
    fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    fn distribution(&self, g: f64) -> Result<OutcomeDistribution> {
        let m = self.masses(g);
        let total: f64 = m.iter().sum();
        if !(total > tol::PROBABILITY_FLOOR) {
            return Err(Error::DegeneratePostselection {
                overlap: total.max(0.0).sqrt(),
            });
        }
        OutcomeDistribution::new(m.into_iter().map(|x| x / total).collect())
    }

    fn increment(&self, g: f64, step: f64) -> Result<Vec<f64>> {
        let m = self.masses(g);
        let dm = self.mass_increments(g, step);
        let total: f64 = m.iter().sum();
        let d_total: f64 = dm.iter().sum();
        Ok(m
            .iter()
            .zip(&dm)
            .map(|(m, d)| (d * total - m * d_total) / (total * (total + d_total)))
            .collect())
    }

    fn derivative(&self, g: f64) -> Result<Vec<f64>> {
        let mut m = Vec::with_capacity(self.outcomes.len());
        let mut dm = Vec::with_capacity(self.outcomes.len());
        for chs in &self.outcomes {
            let (mut a, mut b) = (0.0, 0.0);
            for c in chs {
                let mut amp = C64::new(0.0, 0.0);
                let mut slope = C64::new(0.0, 0.0);
                for (coef, l) in c.coef.iter().zip(&self.values) {
                    let t = coef * phase(g * l);
                    amp += t;
                    slope += t * C64::new(0.0, -l);
                }
                a += c.weight * amp.norm_sqr();
                b += c.weight * 2.0 * (amp.conj() * slope).re;
            }
            m.push(a);
            dm.push(b);
        }
        let total: f64 = m.iter().sum();
        let d_total: f64 = dm.iter().sum();
        Ok(m.iter()
            .zip(&dm)
            .map(|(m, d)| (d * total - m * d_total) / (total * total))
            .collect())
    }
}
