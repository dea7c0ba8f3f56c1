use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{tol, ComplexMatrix, DensityOperator, HermitianOperator, PureState};

/// Initial system state, pure or mixed.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemState {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl SystemState {
    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(psi) => psi.dim(),
            Self::Mixed(rho) => rho.dim(),
        }
    }

    pub fn density(&self) -> DensityOperator {
        match self {
            Self::Pure(psi) => DensityOperator::from_pure(psi),
            Self::Mixed(rho) => rho.clone(),
        }
    }

    /// `Tr(A ρ_S)`.
    pub fn expectation(&self, a: &HermitianOperator) -> f64 {
        match self {
            Self::Pure(psi) => psi.expectation(a),
            Self::Mixed(rho) => rho.expectation(a),
        }
    }

    /// `⟨ψ_f|ρ_S|ψ_f⟩`.
    pub fn population(&self, psi_f: &PureState) -> f64 {
        match self {
            Self::Pure(psi) => psi_f.inner(psi).norm_sqr(),
            Self::Mixed(rho) => rho.population(psi_f),
        }
    }

    /// Weighted pure components `Σ w_a |φ_a⟩⟨φ_a|` (eigendecomposition for a
    /// mixed state; components of zero weight dropped).
    pub fn ensemble(&self) -> Result<Vec<(f64, Vec<C64>)>> {
        match self {
            Self::Pure(psi) => Ok(vec![(1.0, psi.amplitudes().to_vec())]),
            Self::Mixed(rho) => ensemble_of(rho),
        }
    }
}

pub(crate) fn ensemble_of(rho: &DensityOperator) -> Result<Vec<(f64, Vec<C64>)>> {
    let eig = rho.eigen()?;
    let n = eig.values.len();
    Ok((0..n)
        .filter(|&j| eig.values[j] > 0.0)
        .map(|j| (eig.values[j], eig.vector(j)))
        .collect())
}

impl From<PureState> for SystemState {
    fn from(psi: PureState) -> Self {
        Self::Pure(psi)
    }
}

impl From<DensityOperator> for SystemState {
    fn from(rho: DensityOperator) -> Self {
        Self::Mixed(rho)
    }
}

/// `A_w = ⟨ψ_f|A|ψ_i⟩ / ⟨ψ_f|ψ_i⟩`.
pub fn weak_value(a: &HermitianOperator, psi_i: &PureState, psi_f: &PureState) -> Result<C64> {
    if a.dim() != psi_i.dim() || a.dim() != psi_f.dim() {
        return Err(Error::ContractViolation("weak value dimensions disagree".into()));
    }
    let overlap = psi_f.inner(psi_i);
    if overlap.norm() <= tol::STRUCTURAL {
        return Err(Error::DegeneratePostselection {
            overlap: overlap.norm(),
        });
    }
    Ok(a.matrix().sandwich(psi_f.amplitudes(), psi_i.amplitudes()) / overlap)
}

/// Weak value for a mixed initial state, `⟨ψ_f|A ρ|ψ_f⟩ / ⟨ψ_f|ρ|ψ_f⟩`,
/// which reduces to [`weak_value`] for `ρ = |ψ_i⟩⟨ψ_i|`.
pub fn weak_value_mixed(a: &HermitianOperator, rho: &DensityOperator, psi_f: &PureState) -> Result<C64> {
    if a.dim() != rho.dim() || a.dim() != psi_f.dim() {
        return Err(Error::ContractViolation("weak value dimensions disagree".into()));
    }
    let pop = rho.population(psi_f);
    if pop.max(0.0).sqrt() <= tol::STRUCTURAL {
        return Err(Error::DegeneratePostselection {
            overlap: pop.max(0.0).sqrt(),
        });
    }
    let a_rho = a.matrix() * rho.matrix();
    Ok(a_rho.sandwich(psi_f.amplitudes(), psi_f.amplitudes()) / pop)
}

/// A weak measurement: system and probe states, the coupled observables
/// `A ⊗ G`, an optional postselection, the probe measurement basis and the
/// probe decoherence `ε_D t H′_D`.
#[derive(Clone, Debug)]
pub struct WeakMeasurementSetup {
    system: SystemState,
    probe: DensityOperator,
    system_observable: HermitianOperator,
    probe_observable: HermitianOperator,
    postselection: Option<PureState>,
    probe_basis: Vec<PureState>,
    decoherence_operator: HermitianOperator,
    decoherence_strength: f64,
    interaction_time: f64,
}

impl WeakMeasurementSetup {
    /// Setup without postselection or decoherence.
    pub fn new(
        system: impl Into<SystemState>,
        probe: DensityOperator,
        system_observable: HermitianOperator,
        probe_observable: HermitianOperator,
        probe_basis: Vec<PureState>,
    ) -> Result<Self> {
        let system = system.into();
        let (ds, dp) = (system.dim(), probe.dim());
        if system_observable.dim() != ds {
            return Err(Error::ContractViolation(format!(
                "system observable has dimension {}, system {ds}",
                system_observable.dim()
            )));
        }
        if probe_observable.dim() != dp {
            return Err(Error::ContractViolation(format!(
                "probe observable has dimension {}, probe {dp}",
                probe_observable.dim()
            )));
        }
        check_basis(&probe_basis, dp)?;
        Ok(Self {
            system,
            probe,
            system_observable,
            probe_observable,
            postselection: None,
            probe_basis,
            decoherence_operator: HermitianOperator::diagonal(&vec![0.0; dp]),
            decoherence_strength: 0.0,
            interaction_time: 1.0,
        })
    }

    /// Postselects the system on `psi_f`; requires a nonvanishing overlap with
    /// the initial state.
    pub fn with_postselection(mut self, psi_f: PureState) -> Result<Self> {
        if psi_f.dim() != self.system.dim() {
            return Err(Error::ContractViolation("postselection dimension mismatch".into()));
        }
        let overlap = self.system.population(&psi_f).max(0.0).sqrt();
        if overlap <= tol::STRUCTURAL {
            return Err(Error::DegeneratePostselection { overlap });
        }
        self.postselection = Some(psi_f);
        Ok(self)
    }

    pub fn without_postselection(mut self) -> Self {
        self.postselection = None;
        self
    }

    /// Adds probe decoherence `ε_D t H′_D` with `ε_D ≥ 0`, `t > 0`.
    pub fn with_decoherence(mut self, operator: HermitianOperator, strength: f64, time: f64) -> Result<Self> {
        if operator.dim() != self.probe.dim() {
            return Err(Error::ContractViolation("decoherence operator dimension mismatch".into()));
        }
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::InvalidParameter(format!("decoherence strength {strength} must be ≥ 0")));
        }
        if !(time > 0.0 && time.is_finite()) {
            return Err(Error::InvalidParameter(format!("interaction time {time} must be > 0")));
        }
        self.decoherence_operator = operator;
        self.decoherence_strength = strength;
        self.interaction_time = time;
        Ok(self)
    }

    /// Same setup with the probe observable replaced (dimension must match).
    pub fn with_probe_observable(mut self, g: HermitianOperator) -> Result<Self> {
        if g.dim() != self.probe.dim() {
            return Err(Error::ContractViolation("probe observable dimension mismatch".into()));
        }
        self.probe_observable = g;
        Ok(self)
    }

    pub fn system(&self) -> &SystemState {
        &self.system
    }
    pub fn probe(&self) -> &DensityOperator {
        &self.probe
    }
    pub fn system_observable(&self) -> &HermitianOperator {
        &self.system_observable
    }
    pub fn probe_observable(&self) -> &HermitianOperator {
        &self.probe_observable
    }
    pub fn postselection(&self) -> Option<&PureState> {
        self.postselection.as_ref()
    }
    pub fn probe_basis(&self) -> &[PureState] {
        &self.probe_basis
    }
    pub fn decoherence_operator(&self) -> &HermitianOperator {
        &self.decoherence_operator
    }
    pub fn decoherence_strength(&self) -> f64 {
        self.decoherence_strength
    }
    pub fn interaction_time(&self) -> f64 {
        self.interaction_time
    }

    /// `ε_D t`.
    pub fn decoherence_scale(&self) -> f64 {
        self.decoherence_strength * self.interaction_time
    }

    /// `⟨A⟩_i = Tr(A ρ_S)`.
    pub fn expectation_a(&self) -> f64 {
        self.system.expectation(&self.system_observable)
    }

    pub(crate) fn require_postselection(&self) -> Result<&PureState> {
        self.postselection
            .as_ref()
            .ok_or_else(|| Error::ContractViolation("setup has no postselection".into()))
    }

    /// `A_w` for the configured postselection.
    pub fn weak_value(&self) -> Result<C64> {
        let psi_f = self.require_postselection()?;
        match &self.system {
            SystemState::Pure(psi_i) => weak_value(&self.system_observable, psi_i, psi_f),
            SystemState::Mixed(rho) => weak_value_mixed(&self.system_observable, rho, psi_f),
        }
    }

    /// `⟨ψ_f|ρ_S|ψ_f⟩`, the zeroth-order postselection probability.
    pub fn postselection_probability(&self) -> Result<f64> {
        let psi_f = self.require_postselection()?;
        Ok(self.system.population(psi_f))
    }
}

fn check_basis(basis: &[PureState], dim: usize) -> Result<()> {
    if basis.len() != dim || basis.iter().any(|k| k.dim() != dim) {
        return Err(Error::ContractViolation(format!(
            "probe basis must hold {dim} vectors of dimension {dim}"
        )));
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (a.inner(b) - expected).norm() > tol::SPECTRAL {
                return Err(Error::ContractViolation(format!(
                    "probe basis is not orthonormal at ({i}, {j})"
                )));
            }
        }
    }
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for k in basis {
        sum = &sum + &k.projector();
    }
    if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > tol::SPECTRAL {
        return Err(Error::ContractViolation("probe basis is not complete".into()));
    }
    Ok(())
}
