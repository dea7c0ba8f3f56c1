//! Qubit system ⊗ qubit probe coupled by `g σz⊗σz`, with the probe dephased
//! by `ε_D σy ⊗ b†b` against a single thermal bosonic mode.
//!
//! The bath Hamiltonian is diagonal in the Fock basis, so the joint evolution
//! splits into independent branches: Fock level `n` (weight `w_n`) evolves
//! system and probe under `exp(−i(g σz⊗σz + t n ε_D I⊗σy))`. Everything below
//! is exact up to the Fock cutoff.

mod sweep;

use std::fmt;

use crate::error::{Error, Result};
use crate::estimation::{
    first_order_bias, fisher_information, mle_oracle, Observation, OracleOptions,
};
use crate::linalg::{
    expm_i_hermitian, pauli, tol, ComplexMatrix, DensityOperator, HermitianOperator, PureState,
};
use crate::quantum::{Branch, CouplingModel, WeakMeasurementSetup};

pub use sweep::{sweep, sweep_grid, Spacing, SweepAxis, SweepSpec};

/// Weight tail below which the thermal sum is cut.
pub const THERMAL_TAIL: f64 = 1e-12;
/// Relative tail of the first moment `Σ n w_n` below which the dephasing
/// model's automatic cutoff stops.
pub const MOMENT_TAIL: f64 = 1e-14;
/// Below this the standard-arm bias is treated as zero and the ratio is
/// undefined.
pub const RATIO_FLOOR: f64 = 1e-300;
/// Fisher information below which a probe basis counts as uninformative.
pub const FISHER_FLOOR: f64 = 1e-12;

/// Fock-space truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FockCutoff {
    Auto,
    Fixed(usize),
}

impl fmt::Display for FockCutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for FockCutoff {
    type Err = Error;

    /// `auto` or a positive integer.
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Self::Fixed(n)),
            _ => Err(Error::InvalidParameter(format!(
                "Fock cutoff must be 'auto' or a positive integer, got '{s}'"
            ))),
        }
    }
}

/// Knobs of the dephasing example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DephasingParams {
    /// `ω / kT`.
    pub beta: f64,
    /// Probe basis rotation, `|k′⟩ = e^{−iθσx}|k⟩`.
    pub theta: f64,
    /// Postselection angle, `|ψ_f⟩ = e^{−iδσy}|−⟩`.
    pub delta: f64,
    /// True coupling `g0`.
    pub g: f64,
    pub eps_d: f64,
    pub t: f64,
    pub n_max: FockCutoff,
}

impl Default for DephasingParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            theta: std::f64::consts::FRAC_PI_8,
            delta: 1e-3,
            g: 1e-5,
            eps_d: 1e-5,
            t: 1.0,
            n_max: FockCutoff::Auto,
        }
    }
}

impl DephasingParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.beta, self.theta, self.delta, self.g, self.eps_d, self.t];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta = {} must be > 0", self.beta)));
        }
        if !(self.eps_d >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps_d = {} must be ≥ 0", self.eps_d)));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter(format!("t = {} must be > 0", self.t)));
        }
        if let FockCutoff::Fixed(0) = self.n_max {
            return Err(Error::InvalidParameter("n_max must be positive".into()));
        }
        Ok(())
    }

    /// Fock cutoff in use: the fixed value, or the smallest `N` that meets
    /// both the weight tail and the first-moment tail.
    pub fn cutoff(&self) -> Result<usize> {
        match self.n_max {
            FockCutoff::Fixed(n) => Ok(n),
            FockCutoff::Auto => moment_cutoff(self.beta),
        }
    }

    pub fn weights(&self) -> Result<ThermalWeights> {
        thermal_weights(self.beta, FockCutoff::Fixed(self.cutoff()?))
    }
}

/// Truncated Boltzmann weights `w_n = e^{−βn}(1 − e^{−β})`, `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalWeights {
    pub weights: Vec<f64>,
    pub n_max: usize,
}

impl ThermalWeights {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mean occupation of the truncated, renormalized distribution.
    pub fn mean_occupation(&self) -> f64 {
        let m: f64 = self.weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        m / self.total()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be > 0")));
    }
    Ok(())
}

/// `N = ⌈−ln(1e-12)/β⌉`, the smallest cutoff whose weight tail is below
/// 1e-12.
pub fn thermal_cutoff(beta: f64) -> Result<usize> {
    check_beta(beta)?;
    Ok((-(THERMAL_TAIL.ln()) / beta).ceil() as usize)
}

/// Smallest cutoff at least [`thermal_cutoff`] whose first-moment tail
/// `Σ_{n>N} n w_n / n̄ = x^N (N + 1 − N x)`, `x = e^{−β}`, is below 1e-14.
pub fn moment_cutoff(beta: f64) -> Result<usize> {
    let mut n = thermal_cutoff(beta)?;
    let x = (-beta).exp();
    let tail = |n: usize| {
        let nf = n as f64;
        (nf * x.ln()).exp() * (nf + 1.0 - nf * x)
    };
    while tail(n) > MOMENT_TAIL {
        n += 1;
    }
    Ok(n)
}

pub fn thermal_weights(beta: f64, cutoff: FockCutoff) -> Result<ThermalWeights> {
    check_beta(beta)?;
    let n_max = match cutoff {
        FockCutoff::Auto => thermal_cutoff(beta)?,
        FockCutoff::Fixed(n) => n,
    };
    let norm = -(-beta).exp_m1();
    let weights = (0..=n_max).map(|n| (-beta * n as f64).exp() * norm).collect();
    Ok(ThermalWeights { weights, n_max })
}

/// Probe measurement basis `{e^{−iθσx}|0⟩, e^{−iθσx}|1⟩}`.
pub fn probe_basis(theta: f64) -> Vec<PureState> {
    PureState::computational_basis(2)
        .iter()
        .map(|k| pauli::rotate(&pauli::x(), theta, k))
        .collect()
}

/// `|ψ_f⟩ = e^{−iδσy}|−⟩ = cos δ|−⟩ + sin δ|+⟩`.
pub fn postselection_state(delta: f64) -> PureState {
    pauli::rotate(&pauli::y(), delta, &pauli::minus())
}

/// Which measurement the probe data come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    /// No postselection; the system starts in `|0⟩`.
    Standard,
    /// Postselection on `|ψ_f⟩`; the system starts in `|+⟩`.
    Postselected,
}

impl Arm {
    /// Initial system state of the arm. The standard arm uses the `σz`
    /// eigenstate `|0⟩`: from `|+⟩` its outcome distribution would not
    /// depend on `g` at all.
    pub fn initial_system(self) -> PureState {
        match self {
            Self::Standard => PureState::basis(2, 0),
            Self::Postselected => pauli::plus(),
        }
    }
}

fn coupling() -> HermitianOperator {
    pauli::z().kron(&pauli::z())
}

fn branch_generator(params: &DephasingParams, n: usize) -> HermitianOperator {
    pauli::identity()
        .kron(&pauli::y())
        .scale(params.t * n as f64 * params.eps_d)
}

/// `|Φ^(n)⟩ = exp(−i(g σz⊗σz + t n ε_D I⊗σy)) |system⟩|+⟩`.
pub fn evolve_joint_exact(params: &DephasingParams, system: &PureState, n: usize) -> Result<PureState> {
    params.validate()?;
    let generator = coupling().scale(params.g).add(&branch_generator(params, n));
    let u = expm_i_hermitian(&generator, 1.0)?;
    system.kron(&pauli::plus()).evolve(&u)
}

/// `ρ_SD = Σ_n w_n |Φ^(n)⟩⟨Φ^(n)|` with the weights renormalized over the
/// retained Fock levels.
pub fn joint_state_exact(params: &DephasingParams, system: &PureState) -> Result<DensityOperator> {
    let weights = params.weights()?;
    let total = weights.total();
    let mut rho = ComplexMatrix::zeros(4, 4);
    for (n, w) in weights.weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let phi = evolve_joint_exact(params, system, n)?;
        rho = &rho + &phi.projector().scale_real(w / total);
    }
    DensityOperator::new(rho.hermitian_part())
}

fn branches(params: &DephasingParams) -> Result<Vec<Branch>> {
    if params.eps_d * params.t == 0.0 {
        return Ok(Vec::new());
    }
    let weights = params.weights()?;
    Ok(weights
        .weights
        .iter()
        .enumerate()
        .map(|(n, &weight)| Branch {
            weight,
            generator: branch_generator(params, n),
        })
        .collect())
}

/// Ideal model and observed data for one arm.
#[derive(Clone, Debug)]
pub struct ArmDistributions {
    /// `p_k(g)` with `ε_D = 0`.
    pub ideal: CouplingModel,
    /// Data distribution at `g0 = params.g`, carried with its exact deviation.
    pub observation: Observation,
    /// Postselection probability of the data (1 for the standard arm).
    pub postselect_prob: f64,
    /// `F` of the ideal model at `g0`.
    pub fisher: f64,
}

fn arm_distributions(params: &DephasingParams, arm: Arm) -> Result<ArmDistributions> {
    params.validate()?;
    let system = arm.initial_system();
    let ensemble = vec![(1.0, system.kron(&pauli::plus()).amplitudes().to_vec())];
    let basis = probe_basis(params.theta);
    let outcomes: Vec<Vec<Vec<_>>> = match arm {
        Arm::Standard => basis
            .iter()
            .map(|k| {
                PureState::computational_basis(2)
                    .iter()
                    .map(|s| s.kron(k).amplitudes().to_vec())
                    .collect()
            })
            .collect(),
        Arm::Postselected => {
            if params.delta.sin().abs() <= tol::STRUCTURAL {
                return Err(Error::DegeneratePostselection {
                    overlap: params.delta.sin().abs(),
                });
            }
            let f = postselection_state(params.delta);
            basis.iter().map(|k| vec![f.kron(k).amplitudes().to_vec()]).collect()
        }
    };
    let ideal = CouplingModel::new(coupling(), ensemble, outcomes)?;
    let fisher = match fisher_information(&ideal, params.g) {
        Ok(f) if f > FISHER_FLOOR => f,
        Ok(f) => return Err(Error::UninformativeBasis { fisher: f }),
        Err(Error::UninformativeModel { fisher }) => return Err(Error::UninformativeBasis { fisher }),
        Err(e) => return Err(e),
    };
    let deviation = ideal.deviation(params.g, &branches(params)?)?;
    if !(deviation.expt_mass > tol::PROBABILITY_FLOOR) {
        return Err(Error::DegeneratePostselection {
            overlap: deviation.expt_mass.max(0.0).sqrt(),
        });
    }
    let observation = Observation::from_deviation(&ideal, params.g, deviation.q)?;
    Ok(ArmDistributions {
        ideal,
        observation,
        postselect_prob: deviation.expt_mass,
        fisher,
    })
}

/// Standard arm: probe measured in `{|k′⟩}` with the system traced out.
pub fn distributions_standard(params: &DephasingParams) -> Result<ArmDistributions> {
    arm_distributions(params, Arm::Standard)
}

/// Postselected arm: probe measured in `{|k′⟩}` given successful
/// postselection on `|ψ_f⟩`.
pub fn distributions_postselected(params: &DephasingParams) -> Result<ArmDistributions> {
    arm_distributions(params, Arm::Postselected)
}

/// The arm as a generic setup with effective decoherence `H′_D = n̄ σy`, for
/// the closed-form biases.
pub fn setup_for(params: &DephasingParams, arm: Arm) -> Result<WeakMeasurementSetup> {
    params.validate()?;
    let nbar = params.weights()?.mean_occupation();
    let setup = WeakMeasurementSetup::new(
        arm.initial_system(),
        DensityOperator::from_pure(&pauli::plus()),
        pauli::z(),
        pauli::z(),
        probe_basis(params.theta),
    )?
    .with_decoherence(pauli::y().scale(nbar), params.eps_d, params.t)?;
    match arm {
        Arm::Standard => Ok(setup),
        Arm::Postselected => setup.with_postselection(postselection_state(params.delta)),
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub param_name: String,
    pub param_value: f64,
    pub dg_n: f64,
    pub dg_p: f64,
    /// `dg_p / dg_n`, NaN when `|dg_n|` is below 1e-300.
    pub ratio: f64,
    pub postselect_prob: f64,
    pub fisher_n: f64,
    pub fisher_p: f64,
    pub dg_n_oracle: Option<f64>,
    pub dg_p_oracle: Option<f64>,
}

impl SweepRecord {
    /// Row for a point that failed: every number undefined.
    pub fn undefined(param_name: &str, param_value: f64, oracle: bool) -> Self {
        let oracle_field = oracle.then_some(f64::NAN);
        Self {
            param_name: param_name.to_string(),
            param_value,
            dg_n: f64::NAN,
            dg_p: f64::NAN,
            ratio: f64::NAN,
            postselect_prob: f64::NAN,
            fisher_n: f64::NAN,
            fisher_p: f64::NAN,
            dg_n_oracle: oracle_field,
            dg_p_oracle: oracle_field,
        }
    }
}

pub fn ratio(dg_p: f64, dg_n: f64) -> f64 {
    if dg_n.abs() < RATIO_FLOOR {
        f64::NAN
    } else {
        dg_p / dg_n
    }
}

fn oracle_bias(arm: &ArmDistributions) -> Result<f64> {
    if arm.observation.deviation().iter().all(|q| *q == 0.0) {
        return Ok(0.0);
    }
    Ok(mle_oracle(&arm.observation, &arm.ideal, &OracleOptions::default())?.offset)
}

/// First-order biases of both arms at one parameter point, plus the
/// likelihood-maximizer biases when `oracle` is set. The record is labelled
/// with the true coupling `g`.
pub fn bias_point(params: &DephasingParams, oracle: bool) -> Result<SweepRecord> {
    let std_arm = distributions_standard(params)?;
    let post_arm = distributions_postselected(params)?;
    let dg_n = first_order_bias(&std_arm.observation, &std_arm.ideal)?.bias_first_order;
    let dg_p = first_order_bias(&post_arm.observation, &post_arm.ideal)?.bias_first_order;
    let (dg_n_oracle, dg_p_oracle) = if oracle {
        (Some(oracle_bias(&std_arm)?), Some(oracle_bias(&post_arm)?))
    } else {
        (None, None)
    };
    Ok(SweepRecord {
        param_name: "g".into(),
        param_value: params.g,
        dg_n,
        dg_p,
        ratio: ratio(dg_p, dg_n),
        postselect_prob: post_arm.postselect_prob,
        fisher_n: std_arm.fisher,
        fisher_p: post_arm.fisher,
        dg_n_oracle,
        dg_p_oracle,
    })
}

#[cfg(test)]
mod tests;
