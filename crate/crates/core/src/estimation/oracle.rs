//! Brute-force maximization of the asymptotic log-likelihood.
//!
//! For `N → ∞` the MLE maximizes `ℓ(g) = Σ_k p^expt_k ln p_k(g)`. The search
//! runs in offset coordinates `u = g − g0`, and `ℓ` is evaluated relative to
//! `ℓ(g0)` from model increments:
//!
//! ```text
//! ℓ(g0 + u) − ℓ(g0) = Σ p^expt_k [ln(1 + x_k) − x_k] + Σ q_k x_k,   x_k = Δp_k / p_k(g0)
//! ```
//!
//! which uses `Σ Δp_k = 0` and never subtracts two O(1) log-likelihoods.

use log::debug;
use rayon::prelude::*;

use super::{first_order_bias, Observation, OutcomeDistribution, ParametricModel};
use crate::error::{Error, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const MAX_GOLDEN_STEPS: usize = 200;
const MAX_POLISH_STEPS: usize = 400;
const MAX_CANDIDATES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Absolute search interval in `g`; it must contain `g0`. Defaults to
    /// `g0 ± max(100·|δg|, 1e-3)` using the first-order prediction `δg`.
    pub window: Option<(f64, f64)>,
    /// Grid points for the coarse scan (at least 1000).
    pub grid_points: usize,
    /// Maxima whose log-likelihoods differ by less than this (in nats) are
    /// ties, resolved toward `g0`.
    pub tie_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            window: None,
            grid_points: 2001,
            tie_tolerance: 1e-12,
        }
    }
}

/// Location of the likelihood maximum, split as `g0 + offset` so that a tiny
/// bias is not rounded away by a larger `g0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEstimate {
    pub g0: f64,
    pub offset: f64,
}

impl OracleEstimate {
    pub fn estimate(&self) -> f64 {
        self.g0 + self.offset
    }
}

/// `ln(1 + x) − x` without cancellation for small `x`.
fn log1p_minus_x(x: f64) -> f64 {
    if x.abs() > 0.05 {
        return x.ln_1p() - x;
    }
    // −x²/2 + x³/3 − …, summed from the small end
    let mut powers = [0.0; 24];
    let mut p = x;
    for slot in powers.iter_mut() {
        p *= x;
        *slot = p;
    }
    let mut sum = 0.0;
    for (i, p) in powers.iter().enumerate().rev() {
        let n = (i + 2) as f64;
        sum += if i % 2 == 0 { -p / n } else { p / n };
    }
    sum
}

struct Likelihood<'a, M: ?Sized> {
    model: &'a M,
    obs: &'a Observation,
    keep: Vec<usize>,
}

impl<M: ParametricModel + ?Sized> Likelihood<'_, M> {
    /// `ℓ(g0 + u) − ℓ(g0)`; `−∞` where the model loses support of the data.
    fn value(&self, u: f64) -> Result<f64> {
        let dp = self.model.increment(self.obs.g0(), u)?;
        let (p0, q, e) = (self.obs.reference(), self.obs.deviation(), self.obs.expt());
        let mut curved = 0.0;
        let mut linear = 0.0;
        for &k in &self.keep {
            let x = dp[k] / p0[k];
            linear += q[k] * x;
            if e[k] == 0.0 {
                continue;
            }
            if x <= -1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            curved += e[k] * log1p_minus_x(x);
        }
        Ok(curved + linear)
    }

    /// `∂ℓ/∂g` at `g0 + u`, written as `Σ (q_k − Δp_k) ∂_g ln p_k`.
    fn score(&self, u: f64) -> Result<f64> {
        let g0 = self.obs.g0();
        let dp = self.model.increment(g0, u)?;
        let slope = self.model.derivative(g0 + u)?;
        let (p0, q) = (self.obs.reference(), self.obs.deviation());
        Ok(self
            .keep
            .iter()
            .map(|&k| (q[k] - dp[k]) * slope[k] / (p0[k] + dp[k]))
            .sum())
    }

    fn golden(&self, mut lo: f64, mut hi: f64, g_scale: f64) -> Result<(f64, f64, f64, f64)> {
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut f1 = self.value(x1)?;
        let mut f2 = self.value(x2)?;
        for _ in 0..MAX_GOLDEN_STEPS {
            if hi - lo <= 1e-14 * g_scale.max(1.0) {
                break;
            }
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + GOLDEN * (hi - lo);
                f2 = self.value(x2)?;
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - GOLDEN * (hi - lo);
                f1 = self.value(x1)?;
            }
        }
        let (u, f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        Ok((lo, hi, u, f))
    }

    /// Bisects the score on a bracket with `S(lo) > 0 > S(hi)`.
    fn polish(&self, mut lo: f64, mut hi: f64) -> Result<Option<f64>> {
        let s_lo = self.score(lo)?;
        let s_hi = self.score(hi)?;
        if s_lo == 0.0 {
            return Ok(Some(lo));
        }
        if s_hi == 0.0 {
            return Ok(Some(hi));
        }
        if !(s_lo > 0.0 && s_hi < 0.0) {
            return Ok(None);
        }
        for _ in 0..MAX_POLISH_STEPS {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = self.score(mid)?;
            if s > 0.0 {
                lo = mid;
            } else if s < 0.0 {
                hi = mid;
            } else {
                return Ok(Some(mid));
            }
        }
        Ok(Some(lo + 0.5 * (hi - lo)))
    }
}

/// Maximizes `Σ_k p^expt_k ln p_k(g)` over the search window.
///
/// A grid scan locates every local maximum, each is refined by golden-section
/// search, and the winner is polished to the root of the score
/// `∂_g Σ p^expt_k ln p_k` by bisection. Maxima tied to within
/// [`OracleOptions::tie_tolerance`] resolve to the one closest to `g0`. A
/// maximum on the window boundary is an error.
pub fn mle_oracle<M: ParametricModel + ?Sized>(
    obs: &Observation,
    model: &M,
    options: &OracleOptions,
) -> Result<OracleEstimate> {
    let g0 = obs.g0();
    if options.grid_points < 1000 {
        return Err(Error::InvalidParameter(format!(
            "oracle grid needs at least 1000 points, got {}",
            options.grid_points
        )));
    }
    let (lo, hi) = match options.window {
        Some((lo, hi)) => {
            if !(lo < hi && lo <= g0 && g0 <= hi) {
                return Err(Error::ContractViolation(format!(
                    "search window [{lo:e}, {hi:e}] must contain g0 = {g0:e}"
                )));
            }
            (lo, hi)
        }
        None => {
            let predicted = first_order_bias(obs, model).map_or(0.0, |r| r.bias_first_order);
            let half = f64::max(100.0 * predicted.abs(), 1e-3);
            (g0 - half, g0 + half)
        }
    };
    let (a, b) = (lo - g0, hi - g0);
    let like = Likelihood {
        model,
        obs,
        keep: obs.retained().collect(),
    };

    let n = options.grid_points;
    let step = (b - a) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect();
    let values = grid
        .par_iter()
        .map(|&u| like.value(u))
        .collect::<Result<Vec<f64>>>()?;

    let best = (0..n)
        .filter(|&i| values[i].is_finite())
        .max_by(|&i, &j| values[i].total_cmp(&values[j]))
        .ok_or_else(|| Error::NumericalFailure("likelihood is -inf across the window".into()))?;
    if best == 0 || best == n - 1 {
        return Err(Error::SearchIntervalTooSmall { lo, hi });
    }

    let mut peaks: Vec<usize> = (1..n - 1)
        .filter(|&i| values[i].is_finite() && values[i] >= values[i - 1] && values[i] >= values[i + 1])
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    peaks.truncate(MAX_CANDIDATES);

    let scale = g0.abs();
    let mut refined = Vec::with_capacity(peaks.len());
    for &i in &peaks {
        let (l, h, u, f) = like.golden(grid[i - 1], grid[i + 1], scale)?;
        refined.push((i, l, h, u, f));
    }
    let top = refined.iter().map(|r| r.4).fold(f64::NEG_INFINITY, f64::max);
    let &(i, l, h, u, _) = refined
        .iter()
        .filter(|r| r.4 >= top - options.tie_tolerance)
        .min_by(|x, y| x.3.abs().total_cmp(&y.3.abs()))
        .expect("the global grid maximum is a local maximum");
    if refined.iter().filter(|r| r.4 >= top - options.tie_tolerance).count() > 1 {
        debug!("likelihood tie among maxima; keeping the one nearest g0");
    }

    let offset = match like.polish(l, h)? {
        Some(root) => root,
        None => like.polish(grid[i - 1], grid[i + 1])?.unwrap_or(u),
    };
    Ok(OracleEstimate { g0, offset })
}

/// [`mle_oracle`] for a plain data distribution.
pub fn mle_oracle_distribution<M: ParametricModel + ?Sized>(
    p_expt: &OutcomeDistribution,
    model: &M,
    g0: f64,
    options: &OracleOptions,
) -> Result<OracleEstimate> {
    mle_oracle(&Observation::new(model, g0, p_expt.clone())?, model, options)
}
