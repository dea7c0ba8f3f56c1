//! Self-checks run from the command line and the test suite.
//!
//! Each check measures one residual and compares it with a limit. Structural
//! limits are multiplied by a tolerance scale so that a scale of zero turns
//! the suite into a negative control: every check with a nonzero residual
//! must then fail.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dephasing::{
    bias_point, distributions_postselected, distributions_standard, joint_state_exact,
    postselection_state, setup_for, thermal_weights, Arm, DephasingParams, FockCutoff,
};
use crate::error::{Error, Result};
use crate::estimation::{
    binomial_model, d_relative_entropy_dg, first_order_bias, fisher_information, mle_oracle,
    systematic_error_first_order, systematic_error_postselected, systematic_error_standard,
    Observation, OracleOptions, OutcomeDistribution, ParametricModel,
};
use crate::linalg::{
    eig_hermitian, expm_i_hermitian, kron, partial_trace_matrix, pauli, ComplexMatrix, DensityOperator,
    HermitianOperator, PureState, Subsystem,
};
use crate::quantum::{
    apply_probe_decoherence_first_order, first_order_deviation, pointer_shift_exact,
    pointer_shift_first_order, probe_state_postselected_exact, probe_state_postselected_first_order,
    probe_state_standard_exact, probe_state_standard_first_order, probe_weak_values, weak_value,
    FirstOrderModel, WeakMeasurementSetup,
};

/// Minimum convergence order accepted for quantities that should approach
/// their first-order prediction quadratically.
pub const MIN_ORDER: f64 = 1.8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Multiplies every structural limit; 0 is a negative control.
    pub tolerance_scale: f64,
    /// Randomized setups per arm for the closed-form and identity checks.
    pub random_setups: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance_scale: 1.0,
            random_setups: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Measured residual; NaN when the check could not be computed.
    pub residual: f64,
    pub limit: f64,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.limit
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} residual {:<12.3e} limit {:<9.1e} {:>6.2}s  {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.limit,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

type Measured = Result<(f64, String)>;

struct Suite {
    scale: f64,
    checks: Vec<Check>,
}

impl Suite {
    /// A check whose limit is scaled by the tolerance scale.
    fn scaled(&mut self, name: &'static str, limit: f64, f: impl FnOnce() -> Measured) {
        self.push(name, limit * self.scale, f);
    }

    /// A check with a fixed limit (convergence orders).
    fn fixed(&mut self, name: &'static str, limit: f64, f: impl FnOnce() -> Measured) {
        self.push(name, limit, f);
    }

    fn push(&mut self, name: &'static str, limit: f64, f: impl FnOnce() -> Measured) {
        let start = Instant::now();
        let (residual, detail) = match f() {
            Ok(r) => r,
            Err(e) => (f64::NAN, format!("error: {e}")),
        };
        self.checks.push(Check {
            name,
            residual,
            limit,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
}

/// Runs every check.
pub fn run(opts: &ValidateOptions) -> ValidationReport {
    let mut s = Suite {
        scale: opts.tolerance_scale,
        checks: Vec::new(),
    };
    let seed = opts.seed;
    let n = opts.random_setups;

    s.scaled("unitarity", 1e-12, || unitarity(seed));
    s.scaled("eigen reconstruction", 1e-12, || eigen_reconstruction(seed));
    s.scaled("partial trace", 1e-13, || partial_trace_oracle(seed));
    s.scaled("thermal normalization", 1e-12, thermal_normalization);
    s.scaled("psd clamping", 1e-12, psd_clamping);
    s.scaled("trace preservation", 1e-12, || trace_preservation(seed, n));
    s.scaled("weak value identities", 1e-12, || weak_value_identities(seed, n));
    s.scaled("weak value cot delta", 1e-10, weak_value_cot);
    s.scaled("route equivalence", 1e-10, || route_equivalence(seed, n));
    s.scaled("closed form consistency", 1e-12, || closed_form_consistency(seed, n));
    s.scaled("binomial first order", 1e-12, || binomial(false));
    s.scaled("binomial oracle", 1e-10, || binomial(true));
    s.scaled("unbiased data", 1e-15, unbiased_data);
    s.scaled("fisher curvature", 1e-6, fisher_curvature);
    s.scaled("branch decomposition", 1e-12, branch_decomposition);
    s.scaled("truncation stability", 1e-12, truncation_stability);
    s.fixed("oracle convergence", 0.0, oracle_convergence);
    s.fixed("first order convergence", 0.0, first_order_convergence);
    s.fixed("pointer shift convergence", 0.0, pointer_shift_convergence);

    ValidationReport { checks: s.checks }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> HermitianOperator {
    let data = (0..dim * dim).map(|_| random_c64(rng)).collect();
    let m = ComplexMatrix::new(dim, dim, data).expect("finite entries");
    HermitianOperator::new(m.hermitian_part()).expect("Hermitian part")
}

pub fn random_pure(rng: &mut impl Rng, dim: usize) -> PureState {
    loop {
        let amps = (0..dim).map(|_| random_c64(rng)).collect();
        if let Ok(psi) = PureState::normalized(amps) {
            return psi;
        }
    }
}

/// `M M† / Tr`, full rank with probability one.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let data = (0..dim * dim).map(|_| random_c64(rng)).collect();
    let m = ComplexMatrix::new(dim, dim, data).expect("finite entries");
    let mm = &m * &m.adjoint();
    let tr = mm.trace().re;
    DensityOperator::new(mm.scale_real(1.0 / tr).hermitian_part()).expect("positive by construction")
}

/// Orthonormal basis from Gram-Schmidt on random vectors.
pub fn random_basis(rng: &mut impl Rng, dim: usize) -> Vec<PureState> {
    let mut basis: Vec<PureState> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| random_c64(rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let c: C64 = b.amplitudes().iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (x, y) in v.iter_mut().zip(b.amplitudes()) {
                    *x -= c * y;
                }
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            basis.push(PureState::normalized(v).expect("nonzero"));
        }
    }
    basis
}

/// A random setup: system dimension 2 or 3, probe dimension 2 to 4,
/// decoherence `ε_D t ∈ [1e-6, 1e-4]`, every baseline population
/// `⟨k|ρ_D|k⟩ ≥ 1e-3` and [`bias_condition`] at most 1e3. With `postselected`
/// the postselection probability is at least 0.01 and `G` is centred so that
/// `⟨G⟩_D = 0`; otherwise `|⟨A⟩| ≥ 0.1`.
///
/// The two floors keep the bias well conditioned. Any two evaluation routes
/// round the inputs differently at the 1e-16 level, so they can only agree to
/// about `1e-16 × condition`, and to `1e-16/√r` for a population `r`.
pub fn random_setup(rng: &mut impl Rng, postselected: bool) -> Result<WeakMeasurementSetup> {
    let ds = rng.gen_range(2..=3);
    let dp = rng.gen_range(2..=4);
    loop {
        let system = if rng.gen_bool(0.5) {
            crate::quantum::SystemState::Pure(random_pure(rng, ds))
        } else {
            crate::quantum::SystemState::Mixed(random_density(rng, ds))
        };
        let probe = if rng.gen_bool(0.5) {
            DensityOperator::from_pure(&random_pure(rng, dp))
        } else {
            random_density(rng, dp)
        };
        let a = random_hermitian(rng, ds);
        let mut g = random_hermitian(rng, dp);
        if postselected {
            let mean = probe.expectation(&g);
            g = g.add(&HermitianOperator::identity(dp).scale(-mean));
        }
        let basis = random_basis(rng, dp);
        if basis.iter().any(|k| probe.population(k) < 1e-3) {
            continue;
        }
        let strength = 10f64.powf(rng.gen_range(-6.0..-4.0));
        let setup = WeakMeasurementSetup::new(system, probe, a, g, basis)?.with_decoherence(
            random_hermitian(rng, dp),
            strength,
            1.0,
        )?;
        let setup = if postselected {
            let f = random_pure(rng, ds);
            if setup.system().population(&f) < 0.01 {
                continue;
            }
            setup.with_postselection(f)?
        } else if setup.expectation_a().abs() >= 0.1 {
            setup
        } else {
            continue;
        };
        if bias_condition(&setup)? <= 1e3 {
            return Ok(setup);
        }
    }
}

/// Sensitivity of the closed-form bias to rounding of its inputs:
/// `Σ r |H′_w||X_w| / |Σ r Im H′_w Im X_w| + Σ r |X_w|² / Σ r Im² X_w`, with
/// `X_w = A_w G_w` under postselection and `G_w` otherwise. Large values
/// mean the bias is a small residue of much larger terms.
pub fn bias_condition(setup: &WeakMeasurementSetup) -> Result<f64> {
    let aw = match setup.postselection() {
        Some(_) => setup.weak_value()?,
        None => C64::new(1.0, 0.0),
    };
    let w = probe_weak_values(setup)?;
    let (mut num, mut num_scale, mut den, mut den_scale) = (0.0, 0.0, 0.0, 0.0);
    for ((r, gw), hw) in w.baseline.iter().zip(&w.observable).zip(&w.decoherence) {
        let x = aw * gw;
        num += r * hw.im * x.im;
        num_scale += r * hw.norm() * x.norm();
        den += r * x.im * x.im;
        den_scale += r * x.norm_sqr();
    }
    Ok(num_scale / num.abs() + den_scale / den)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

fn unitarity(seed: u64) -> Measured {
    let mut r = rng(seed, 1);
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        let h = random_hermitian(&mut r, 2 + i % 7);
        let scale = 10f64.powi(i as i32 % 10 - 8);
        let u = expm_i_hermitian(&h, scale)?;
        let id = ComplexMatrix::identity(h.dim());
        worst = worst.max((&u.adjoint() * &u).max_abs_diff(&id));
        worst = worst.max((&u * &u.adjoint()).max_abs_diff(&id));
    }
    Ok((worst, "max |U†U − I| over 40 random generators".into()))
}

fn eigen_reconstruction(seed: u64) -> Measured {
    let mut r = rng(seed, 2);
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        let h = random_hermitian(&mut r, 2 + i % 7);
        let eig = eig_hermitian(&h)?;
        let back = eig.map(|l| C64::new(l, 0.0));
        worst = worst.max(back.max_abs_diff(h.matrix()) / h.matrix().max_abs());
        if eig.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::NumericalFailure("eigenvalues not ascending".into()));
        }
    }
    Ok((worst, "max |V Λ V† − H| / |H|".into()))
}

fn partial_trace_oracle(seed: u64) -> Measured {
    let mut r = rng(seed, 3);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (da, db) = (2 + i % 3, 2 + (i / 3) % 3);
        let a = random_density(&mut r, da);
        let b = random_density(&mut r, db);
        let ab = kron(a.matrix(), b.matrix());
        worst = worst.max(partial_trace_matrix(&ab, (da, db), Subsystem::First)?.max_abs_diff(a.matrix()));
        worst = worst.max(partial_trace_matrix(&ab, (da, db), Subsystem::Second)?.max_abs_diff(b.matrix()));

        // Entangled input against a basis-vector sum: Tr_B M = Σ_k (I⊗⟨k|) M (I⊗|k⟩).
        let joint = random_density(&mut r, da * db);
        let mut oracle = ComplexMatrix::zeros(da, da);
        for k in 0..db {
            let ek = PureState::basis(db, k);
            let cols: Vec<Vec<C64>> = (0..da)
                .map(|j| PureState::basis(da, j).kron(&ek).amplitudes().to_vec())
                .collect();
            for i in 0..da {
                for j in 0..da {
                    oracle[(i, j)] += joint.matrix().sandwich(&cols[i], &cols[j]);
                }
            }
        }
        let got = partial_trace_matrix(joint.matrix(), (da, db), Subsystem::First)?;
        worst = worst.max(got.max_abs_diff(&oracle));
    }
    Ok((worst, "product states and basis-sum oracle".into()))
}

fn thermal_normalization() -> Measured {
    let mut worst: f64 = 0.0;
    for beta in [0.05, 0.2, 1.0, 3.0, 10.0, 50.0] {
        let params = DephasingParams {
            beta,
            ..Default::default()
        };
        let w = params.weights()?;
        if w.weights.iter().any(|x| *x < 0.0) {
            return Err(Error::NumericalFailure(format!("negative weight at beta {beta}")));
        }
        worst = worst.max((1.0 - w.total()).abs());
        let plain = thermal_weights(beta, FockCutoff::Auto)?;
        worst = worst.max((1.0 - plain.total()).abs());
    }
    Ok((worst, "|1 − Σ w_n| for beta in 0.05..50".into()))
}

fn psd_clamping() -> Measured {
    let rot = expm_i_hermitian(&pauli::y(), 0.37)?;
    let with_negativity = |neg: f64| {
        let d = ComplexMatrix::from_real(2, 2, &[1.0 + neg, 0.0, 0.0, -neg]).expect("finite");
        (&(&rot * &d) * &rot.adjoint()).hermitian_part()
    };
    let (state, clamp) = DensityOperator::clamped(&with_negativity(5e-11))?;
    let min = state.min_eigenvalue()?;
    let trace_err = (state.matrix().trace().re - 1.0).abs();
    let clamp_err = (clamp - 5e-11).abs();
    if DensityOperator::clamped(&with_negativity(1e-9)).is_ok() {
        return Ok((f64::INFINITY, "negativity 1e-9 was accepted".into()));
    }
    let (_, zero) = DensityOperator::clamped(&with_negativity(0.0).hermitian_part())?;
    let residual = max_of([(-min).max(0.0), trace_err, clamp_err, zero.abs()]);
    Ok((residual, format!("clamped {clamp:.3e}, rejected 1e-9, min eigenvalue {min:.1e}")))
}

fn trace_preservation(seed: u64, n: usize) -> Measured {
    let mut r = rng(seed, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..n.min(50) {
        let std = random_setup(&mut r, false)?;
        let post = random_setup(&mut r, true)?;
        let g = 1e-3;
        let s1 = apply_probe_decoherence_first_order(&probe_state_standard_first_order(&std, g), &std);
        let (p1, _) = probe_state_postselected_first_order(&post, g)?;
        let p1 = apply_probe_decoherence_first_order(&p1, &post);
        let se = probe_state_standard_exact(&std, g)?;
        let (pe, _) = probe_state_postselected_exact(&post, g)?;
        for m in [s1.matrix(), p1.matrix(), se.matrix(), pe.matrix()] {
            worst = worst.max((m.trace() - 1.0).norm());
        }
    }
    Ok((worst, "|Tr ρ − 1|, first-order and exact probe states".into()))
}

fn weak_value_identities(seed: u64, n: usize) -> Measured {
    let mut r = rng(seed, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let setup = random_setup(&mut r, true)?;
        let w = probe_weak_values(&setup)?;
        let total: f64 = w.baseline.iter().sum();
        let mean_g: C64 = w.baseline.iter().zip(&w.observable).map(|(r, g)| r * g).sum();
        let im_h: f64 = w.baseline.iter().zip(&w.decoherence).map(|(r, h)| r * h.im).sum();
        let expect_g = setup.probe().expectation(setup.probe_observable());
        worst = max_of([worst, (total - 1.0).abs(), (mean_g - expect_g).norm(), im_h.abs()]);
    }
    Ok((worst, "Σr = 1, Σ r G_w = ⟨G⟩, Σ r Im H′_w = 0".into()))
}

fn weak_value_cot() -> Measured {
    let mut worst: f64 = 0.0;
    for delta in [1e-4, 1e-3, 1e-2, 0.1, 1.0] {
        let aw = weak_value(&pauli::z(), &pauli::plus(), &postselection_state(delta))?;
        let cot = 1.0 / delta.tan();
        worst = worst.max((aw - cot).norm() / cot.abs());
    }
    Ok((worst, "relative error against cot δ".into()))
}

/// Gap between the direct relative-entropy slope and the cross-term,
/// relative to `Σ |p^expt ∂ ln p|`.
pub fn route_gap<M: ParametricModel + ?Sized>(obs: &Observation, model: &M) -> Result<f64> {
    let literal = d_relative_entropy_dg(obs.expt(), model, obs.g0())?;
    let report = first_order_bias(obs, model)?;
    let p = model.distribution(obs.g0())?;
    let dp = model.derivative(obs.g0())?;
    let scale: f64 = obs
        .retained()
        .map(|k| (obs.expt()[k] * dp[k] / p[k]).abs())
        .sum();
    Ok((literal - report.d_relative_entropy).abs() / scale)
}

fn route_equivalence(seed: u64, n: usize) -> Measured {
    let mut worst: f64 = 0.0;
    for delta in [1e-4, 1e-3, 1e-2, 0.1] {
        for g in [-1e-5, 0.0, 1e-5] {
            let params = DephasingParams {
                delta,
                g,
                ..Default::default()
            };
            for arm in [distributions_standard(&params)?, distributions_postselected(&params)?] {
                worst = worst.max(route_gap(&arm.observation, &arm.ideal)?);
            }
        }
    }
    let mut r = rng(seed, 6);
    for i in 0..n {
        let setup = random_setup(&mut r, i % 2 == 1)?;
        let model = if setup.postselection().is_some() {
            FirstOrderModel::postselected(&setup)?
        } else {
            FirstOrderModel::standard(&setup)
        };
        let obs = Observation::from_deviation(&model, 0.0, first_order_deviation(&setup))?;
        worst = worst.max(route_gap(&obs, &model)?);
    }
    Ok((worst, "|−∂D − (−Σ q ∂ln p)| / Σ|p^expt ∂ln p|".into()))
}

/// Largest relative difference between the closed forms and the generic
/// engine over `n` random setups of each arm, evaluated at `g0 = 0`.
pub fn closed_form_consistency(seed: u64, n: usize) -> Measured {
    let mut r = rng(seed, 7);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        for postselected in [false, true] {
            let setup = random_setup(&mut r, postselected)?;
            let (model, closed) = if postselected {
                (FirstOrderModel::postselected(&setup)?, systematic_error_postselected(&setup)?)
            } else {
                (FirstOrderModel::standard(&setup), systematic_error_standard(&setup)?)
            };
            let obs = Observation::from_deviation(&model, 0.0, first_order_deviation(&setup))?;
            let generic = first_order_bias(&obs, &model)?.bias_first_order;
            worst = worst.max((generic - closed).abs() / closed.abs());
        }
    }
    Ok((worst, format!("{n} setups per arm, relative difference")))
}

fn binomial(oracle: bool) -> Measured {
    let eps = 1e-4;
    let model = binomial_model();
    let expt = OutcomeDistribution::new(vec![0.5 + eps, 0.5 - eps])?;
    if oracle {
        let obs = Observation::new(&model, 0.0, expt)?;
        let est = mle_oracle(&obs, &model, &OracleOptions::default())?;
        Ok(((est.offset - eps).abs(), format!("maximizer {:.17e}", est.estimate())))
    } else {
        let b = systematic_error_first_order(&expt, &model, 0.0)?.bias_first_order;
        Ok(((b - eps).abs(), format!("first-order bias {b:.17e}")))
    }
}

fn unbiased_data() -> Measured {
    let params = DephasingParams::default();
    let arm = distributions_standard(&params)?;
    let expt = arm.ideal.distribution(params.g)?;
    let obs = Observation::new(&arm.ideal, params.g, expt)?;
    let bias = first_order_bias(&obs, &arm.ideal)?.bias_first_order;
    let est = mle_oracle(&obs, &arm.ideal, &OracleOptions::default())?;
    Ok((
        bias.abs().max(est.offset.abs()),
        format!("bias {bias:.1e}, maximizer offset {:.1e}", est.offset),
    ))
}

fn fisher_curvature() -> Measured {
    let params = DephasingParams {
        g: 0.01,
        ..Default::default()
    };
    let arm = distributions_standard(&params)?;
    let g0 = params.g;
    let p0 = arm.ideal.distribution(g0)?;
    let ll = |g: f64| -> Result<f64> {
        let p = arm.ideal.distribution(g)?;
        Ok(p0.iter().zip(p.iter()).map(|(a, b)| a * b.ln()).sum())
    };
    let h = 1e-3;
    let curvature = (ll(g0 + h)? - 2.0 * ll(g0)? + ll(g0 - h)?) / (h * h);
    let fisher = fisher_information(&arm.ideal, g0)?;
    Ok(((fisher + curvature).abs() / fisher, format!("F = {fisher:.6}, −∂²ℓ = {:.6}", -curvature)))
}

fn taylor_expm_i(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.rows();
    let step = h.scale(C64::new(0.0, -1.0));
    let mut term = ComplexMatrix::identity(n);
    let mut sum = term.clone();
    for k in 1..60 {
        term = (&term * &step).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Joint system-probe state from the full system ⊗ probe ⊗ mode space, to
/// compare with the branch-by-branch construction.
fn full_space_joint(params: &DephasingParams, system: &PureState) -> Result<DensityOperator> {
    let n_max = params.cutoff()?;
    let dm = n_max + 1;
    let weights = params.weights()?;
    let total = weights.total();
    let number = ComplexMatrix::from_diagonal(&(0..dm).map(|n| C64::new(n as f64, 0.0)).collect::<Vec<_>>());
    let zz = kron(pauli::z().matrix(), pauli::z().matrix());
    let iy = kron(pauli::identity().matrix(), pauli::y().matrix());
    let generator = &kron(&zz, &ComplexMatrix::identity(dm)).scale_real(params.g)
        + &kron(&iy, &number).scale_real(params.t * params.eps_d);
    let u = taylor_expm_i(&generator);
    let sd = system.kron(&pauli::plus()).projector();
    let mode = ComplexMatrix::from_diagonal(
        &weights.weights.iter().map(|w| C64::new(w / total, 0.0)).collect::<Vec<_>>(),
    );
    let rho = kron(&sd, &mode);
    let evolved = &(&u * &rho) * &u.adjoint();
    DensityOperator::new(partial_trace_matrix(&evolved, (4, dm), Subsystem::First)?.hermitian_part())
}

fn branch_decomposition() -> Measured {
    let mut worst: f64 = 0.0;
    for (g, eps_d) in [(0.3, 0.02), (1e-5, 1e-5), (-0.05, 0.1)] {
        let params = DephasingParams {
            g,
            eps_d,
            n_max: FockCutoff::Fixed(12),
            ..Default::default()
        };
        for arm in [Arm::Standard, Arm::Postselected] {
            let system = arm.initial_system();
            let branches = joint_state_exact(&params, &system)?;
            let full = full_space_joint(&params, &system)?;
            worst = worst.max(branches.matrix().max_abs_diff(full.matrix()));
        }
    }
    Ok((worst, "branch sum vs full 52-dimensional evolution".into()))
}

/// Largest relative change of both biases when the Fock cutoff is doubled.
pub fn truncation_stability() -> Measured {
    let mut worst: f64 = 0.0;
    for (beta, delta) in [(1.0, 1e-3), (0.3, 1e-2), (3.0, 1e-4)] {
        let base = DephasingParams {
            beta,
            delta,
            ..Default::default()
        };
        let n = base.cutoff()?;
        let a = bias_point(&base, false)?;
        let b = bias_point(
            &DephasingParams {
                n_max: FockCutoff::Fixed(2 * n),
                ..base
            },
            false,
        )?;
        worst = max_of([
            worst,
            ((a.dg_n - b.dg_n) / b.dg_n).abs(),
            ((a.dg_p - b.dg_p) / b.dg_p).abs(),
        ]);
    }
    Ok((worst, "relative bias shift, N → 2N".into()))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Residuals `|maximizer − (g0 + δg)|` for both arms at `(g, ε_D)` scaled by
/// each `s`.
pub fn oracle_residuals(base: &DephasingParams, scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    scales
        .par_iter()
        .map(|&s| {
            let params = DephasingParams {
                g: base.g * s,
                eps_d: base.eps_d * s,
                ..*base
            };
            let mut out = [0.0; 2];
            let arms = [distributions_standard(&params)?, distributions_postselected(&params)?];
            for (slot, arm) in out.iter_mut().zip(&arms) {
                let first = first_order_bias(&arm.observation, &arm.ideal)?.bias_first_order;
                let est = mle_oracle(&arm.observation, &arm.ideal, &OracleOptions::default())?;
                *slot = (est.offset - first).abs();
            }
            Ok((out[0], out[1]))
        })
        .collect()
}

fn oracle_convergence() -> Measured {
    let scales = [1.0, 0.1, 0.01];
    let res = oracle_residuals(&DephasingParams::default(), &scales)?;
    let std: Vec<f64> = res.iter().map(|r| r.0).collect();
    let post: Vec<f64> = res.iter().map(|r| r.1).collect();
    let (pn, pp) = (log_log_slope(&scales, &std), log_log_slope(&scales, &post));
    Ok((
        MIN_ORDER - pn.min(pp),
        format!("order {pn:.2} standard, {pp:.2} postselected"),
    ))
}

fn first_order_convergence() -> Measured {
    let xs = [1e-2, 1e-3, 1e-4];
    let mut orders = Vec::new();
    for arm in [Arm::Standard, Arm::Postselected] {
        let mut dist = Vec::new();
        for &x in &xs {
            let params = DephasingParams {
                g: x,
                eps_d: x,
                delta: 0.1,
                ..Default::default()
            };
            let setup = setup_for(&params, arm)?;
            let d = match arm {
                Arm::Standard => {
                    let s = probe_state_standard_first_order(&setup, x);
                    apply_probe_decoherence_first_order(&s, &setup)
                        .trace_distance(&probe_state_standard_exact(&setup, x)?)?
                }
                Arm::Postselected => {
                    let (s, _) = probe_state_postselected_first_order(&setup, x)?;
                    apply_probe_decoherence_first_order(&s, &setup)
                        .trace_distance(&probe_state_postselected_exact(&setup, x)?.0)?
                }
            };
            dist.push(d);
        }
        orders.push(log_log_slope(&xs, &dist));
    }
    Ok((
        MIN_ORDER - orders[0].min(orders[1]),
        format!("trace-distance order {:.2} standard, {:.2} postselected", orders[0], orders[1]),
    ))
}

fn pointer_shift_convergence() -> Measured {
    let gs = [1e-2, 1e-3, 1e-4];
    let params = DephasingParams {
        delta: 0.1,
        ..Default::default()
    };
    let setup = setup_for(&params, Arm::Postselected)?;
    let mut worst_order = f64::INFINITY;
    for m in [pauli::x(), pauli::y()] {
        let mut err = Vec::new();
        for &g in &gs {
            err.push((pointer_shift_first_order(&setup, &m, g)? - pointer_shift_exact(&setup, &m, g)?).abs());
        }
        worst_order = worst_order.min(log_log_slope(&gs, &err));
    }
    Ok((MIN_ORDER - worst_order, format!("order {worst_order:.2} for σx and σy")))
}
