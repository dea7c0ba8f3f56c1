use super::OutcomeDistribution;
use crate::error::{Error, Result};

/// Central-difference step used when a model has no analytic derivative.
pub fn finite_difference_step(g: f64) -> f64 {
    f64::max(1e-9, 1e-4 * g.abs())
}

/// A family of outcome distributions indexed by the coupling `g`.
///
/// Only [`distribution`](Self::distribution) is required. Models that can do
/// better should override [`increment`](Self::increment), which the bias and
/// likelihood code uses to avoid subtracting nearly equal probabilities, and
/// [`derivative`](Self::derivative).
pub trait ParametricModel: Send + Sync {
    fn outcome_count(&self) -> usize;

    fn distribution(&self, g: f64) -> Result<OutcomeDistribution>;

    /// `p(g + step) − p(g)`.
    fn increment(&self, g: f64, step: f64) -> Result<Vec<f64>> {
        let a = self.distribution(g)?;
        let b = self.distribution(g + step)?;
        Ok(b.iter().zip(a.iter()).map(|(x, y)| x - y).collect())
    }

    /// `∂p/∂g`, by central differences unless overridden.
    fn derivative(&self, g: f64) -> Result<Vec<f64>> {
        let h = finite_difference_step(g);
        let p = self.distribution(g)?;
        Ok(central_difference(p.probabilities(), &self.increment(g, h)?, &self.increment(g, -h)?, h))
    }
}

/// Central difference from forward and backward increments, with the rounding
/// drift of `Σ ∂p` (zero for a normalized family) taken out along `p`.
fn central_difference(p: &[f64], up: &[f64], down: &[f64], h: f64) -> Vec<f64> {
    let d: Vec<f64> = up.iter().zip(down).map(|(u, d)| (u - d) / (2.0 * h)).collect();
    let drift: f64 = d.iter().sum();
    d.iter().zip(p).map(|(d, p)| d - p * drift).collect()
}

impl<M: ParametricModel + ?Sized> ParametricModel for &M {
    fn outcome_count(&self) -> usize {
        (**self).outcome_count()
    }
    fn distribution(&self, g: f64) -> Result<OutcomeDistribution> {
        (**self).distribution(g)
    }
    fn increment(&self, g: f64, step: f64) -> Result<Vec<f64>> {
        (**self).increment(g, step)
    }
    fn derivative(&self, g: f64) -> Result<Vec<f64>> {
        (**self).derivative(g)
    }
}

type ProbFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Model defined by closures returning raw probability vectors.
pub struct FnModel {
    outcomes: usize,
    probabilities: Box<ProbFn>,
    derivative: Option<Box<ProbFn>>,
}

impl FnModel {
    pub fn new(outcomes: usize, probabilities: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            outcomes,
            probabilities: Box::new(probabilities),
            derivative: None,
        }
    }

    /// Supplies an analytic derivative.
    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.derivative = Some(Box::new(derivative));
        self
    }

    fn checked(&self, v: Vec<f64>) -> Result<Vec<f64>> {
        if v.len() != self.outcomes {
            return Err(Error::ContractViolation(format!(
                "model returned {} outcomes, declared {}",
                v.len(),
                self.outcomes
            )));
        }
        Ok(v)
    }
}

impl ParametricModel for FnModel {
    fn outcome_count(&self) -> usize {
        self.outcomes
    }

    fn distribution(&self, g: f64) -> Result<OutcomeDistribution> {
        OutcomeDistribution::new(self.checked((self.probabilities)(g))?)
    }

    fn increment(&self, g: f64, step: f64) -> Result<Vec<f64>> {
        let a = self.checked((self.probabilities)(g))?;
        let b = self.checked((self.probabilities)(g + step))?;
        Ok(b.iter().zip(&a).map(|(x, y)| x - y).collect())
    }

    fn derivative(&self, g: f64) -> Result<Vec<f64>> {
        match &self.derivative {
            Some(d) => self.checked(d(g)),
            None => {
                let h = finite_difference_step(g);
                let p = self.checked((self.probabilities)(g))?;
                Ok(central_difference(&p, &self.increment(g, h)?, &self.increment(g, -h)?, h))
            }
        }
    }
}

/// The two-outcome model `p(g) = (1/2 + g, 1/2 − g)`.
pub fn binomial_model() -> FnModel {
    FnModel::new(2, |g| vec![0.5 + g, 0.5 - g]).with_derivative(|_| vec![1.0, -1.0])
}
