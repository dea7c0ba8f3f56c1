use super::{OutcomeDistribution, ParametricModel};
use crate::error::{Error, Result};
use crate::linalg::tol;

/// Data distribution `p^expt = p(g0) + q` held alongside the model baseline.
///
/// The deviation `q` is stored separately from `p^expt` because the bias is
/// linear in `q`; recovering it by subtracting two nearly equal distributions
/// would throw away most of its significant digits.
#[derive(Clone, Debug)]
pub struct Observation {
    g0: f64,
    reference: Vec<f64>,
    deviation: Vec<f64>,
    expt: OutcomeDistribution,
}

impl Observation {
    /// Observation from a data distribution; `q` is obtained by subtraction.
    pub fn new<M: ParametricModel + ?Sized>(
        model: &M,
        g0: f64,
        expt: OutcomeDistribution,
    ) -> Result<Self> {
        let reference = model.distribution(g0)?.into_vec();
        check_len(reference.len(), expt.len())?;
        let deviation = expt.iter().zip(&reference).map(|(e, p)| e - p).collect();
        Self::assemble(g0, reference, deviation, expt)
    }

    /// Observation from an exactly known deviation `q` (Σ q = 0).
    pub fn from_deviation<M: ParametricModel + ?Sized>(
        model: &M,
        g0: f64,
        deviation: Vec<f64>,
    ) -> Result<Self> {
        let reference = model.distribution(g0)?.into_vec();
        check_len(reference.len(), deviation.len())?;
        let mut expt = Vec::with_capacity(reference.len());
        for (k, (p, q)) in reference.iter().zip(&deviation).enumerate() {
            let e = p + q;
            if e < -tol::SPECTRAL {
                return Err(Error::InvalidState(format!(
                    "outcome {k}: deviation {q:e} drives the probability negative"
                )));
            }
            expt.push(e.max(0.0));
        }
        let expt = OutcomeDistribution::new(expt)?;
        Self::assemble(g0, reference, deviation, expt)
    }

    fn assemble(
        g0: f64,
        reference: Vec<f64>,
        deviation: Vec<f64>,
        expt: OutcomeDistribution,
    ) -> Result<Self> {
        for (k, p) in reference.iter().enumerate() {
            if *p <= tol::PROBABILITY_FLOOR && expt[k] > tol::PROBABILITY_FLOOR {
                return Err(Error::SupportMismatch { outcome: k });
            }
        }
        Ok(Self {
            g0,
            reference,
            deviation,
            expt,
        })
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// `p(g0)`.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// `q = p^expt − p(g0)`.
    pub fn deviation(&self) -> &[f64] {
        &self.deviation
    }

    pub fn expt(&self) -> &OutcomeDistribution {
        &self.expt
    }

    /// Outcomes whose baseline probability is above the floor.
    pub fn retained(&self) -> impl Iterator<Item = usize> + '_ {
        self.reference
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > tol::PROBABILITY_FLOOR)
            .map(|(k, _)| k)
    }
}

fn check_len(model: usize, data: usize) -> Result<()> {
    if model != data {
        return Err(Error::ContractViolation(format!(
            "model has {model} outcomes, data has {data}"
        )));
    }
    Ok(())
}

/// First-order bias and the quantities it is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasReport {
    pub g0: f64,
    /// `δg = −∂_g D(P^expt‖P_g) / F` at `g0`.
    pub bias_first_order: f64,
    pub fisher: f64,
    /// `∂_g D(P^expt‖P_g)` at `g0`, evaluated as `−Σ q_k ∂_g ln p_k` so it
    /// keeps full relative precision.
    pub d_relative_entropy: f64,
    /// Likelihood maximizer minus `g0`, when computed.
    pub bias_oracle: Option<f64>,
}

/// Baseline distribution and its derivative at `g`.
fn baseline<M: ParametricModel + ?Sized>(model: &M, g: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = model.distribution(g)?.into_vec();
    let dp = model.derivative(g)?;
    check_len(p.len(), dp.len())?;
    Ok((p, dp))
}

fn fisher_from(p: &[f64], dp: &[f64]) -> Result<f64> {
    let fisher: f64 = p
        .iter()
        .zip(dp)
        .filter(|(p, _)| **p > tol::PROBABILITY_FLOOR)
        .map(|(p, d)| d * d / p)
        .sum();
    if !(fisher >= 1e-300) {
        return Err(Error::UninformativeModel { fisher });
    }
    Ok(fisher)
}

/// `F = Σ_k (∂_g p_k)² / p_k` at `g0`, over outcomes above the probability
/// floor.
pub fn fisher_information<M: ParametricModel + ?Sized>(model: &M, g0: f64) -> Result<f64> {
    let (p, dp) = baseline(model, g0)?;
    fisher_from(&p, &dp)
}

/// `D(p‖q) = Σ_k p_k ln(p_k/q_k)` in nats.
pub fn relative_entropy(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    check_len(p.len(), q.len())?;
    let mut d = 0.0;
    for (k, (a, b)) in p.iter().zip(q.iter()).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::SupportMismatch { outcome: k });
        }
        d += a * (a / b).ln();
    }
    Ok(d.max(0.0))
}

/// `∂_g D(P^expt‖P_g)` at `g0`, summed directly as `−Σ p^expt_k ∂_g ln p_k`.
pub fn d_relative_entropy_dg<M: ParametricModel + ?Sized>(
    p_expt: &OutcomeDistribution,
    model: &M,
    g0: f64,
) -> Result<f64> {
    let (p, dp) = baseline(model, g0)?;
    check_len(p.len(), p_expt.len())?;
    let mut sum = 0.0;
    for k in 0..p.len() {
        if p[k] <= tol::PROBABILITY_FLOOR {
            if p_expt[k] > tol::PROBABILITY_FLOOR {
                return Err(Error::SupportMismatch { outcome: k });
            }
            continue;
        }
        sum -= p_expt[k] * dp[k] / p[k];
    }
    Ok(sum)
}

/// First-order systematic error of the asymptotic MLE.
///
/// The bias is `Σ q_k ∂_g ln p_k / F`. The direct relative-entropy sum
/// `−Σ p^expt_k ∂_g ln p_k` is computed as well and must agree with the
/// cross-term to within 1e-10 of its natural scale `Σ |p^expt_k ∂_g ln p_k|`,
/// otherwise [`Error::RouteMismatch`] is returned.
pub fn first_order_bias<M: ParametricModel + ?Sized>(
    obs: &Observation,
    model: &M,
) -> Result<BiasReport> {
    let (p, dp) = baseline(model, obs.g0)?;
    check_len(p.len(), obs.reference.len())?;
    let fisher = fisher_from(&p, &dp)?;
    let mut cross = 0.0;
    let mut direct = 0.0;
    let mut scale = 0.0;
    for k in obs.retained() {
        let score = dp[k] / p[k];
        cross += obs.deviation[k] * score;
        direct -= obs.expt[k] * score;
        scale += (obs.expt[k] * score).abs();
    }
    if (direct + cross).abs() > tol::SPECTRAL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::RouteMismatch {
            entropy_route: -direct,
            cross_route: cross,
        });
    }
    Ok(BiasReport {
        g0: obs.g0,
        bias_first_order: cross / fisher,
        fisher,
        d_relative_entropy: -cross,
        bias_oracle: None,
    })
}

/// [`first_order_bias`] for a plain data distribution.
pub fn systematic_error_first_order<M: ParametricModel + ?Sized>(
    p_expt: &OutcomeDistribution,
    model: &M,
    g0: f64,
) -> Result<BiasReport> {
    first_order_bias(&Observation::new(model, g0, p_expt.clone())?, model)
}
