use std::ops::Index;

use crate::error::{Error, Result};
use crate::linalg::tol;

/// Probability vector over measurement outcomes `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    /// Validates nonnegativity and normalization to within 1e-10.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::ContractViolation("distribution needs at least one outcome".into()));
        }
        if let Some((k, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidState(format!("outcome {k} has probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > tol::SPECTRAL {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    /// Point mass on `outcome`.
    pub fn certain(len: usize, outcome: usize) -> Self {
        let mut probabilities = vec![0.0; len];
        probabilities[outcome] = 1.0;
        Self { probabilities }
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probabilities: vec![1.0 / len as f64; len],
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.probabilities.iter().copied()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probabilities
    }
}

impl Index<usize> for OutcomeDistribution {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.probabilities[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates() {
        assert!(OutcomeDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(OutcomeDistribution::new(vec![0.6, 0.5]).is_err());
        assert!(OutcomeDistribution::new(vec![1.1, -0.1]).is_err());
        assert!(OutcomeDistribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(OutcomeDistribution::new(vec![]).is_err());
        assert!(OutcomeDistribution::new(vec![0.5, 0.5 + 1e-11]).is_ok());
    }
}
