//! Discrimination instances: states plus prior probabilities.

use serde::{Deserialize, Serialize};

use crate::bloch::{density_from_bloch, BlochVector, DensityMatrix, Rotation, DEFAULT_TOL};
use crate::error::{Error, Result};

/// A state-discrimination instance: pure states `beta_j` emitted with priors
/// `p_j`.
///
/// Top-level instances have `sum p_j = 1`; subproblems with `sum p_j < 1`
/// arise when part of the prior mass is carried by states that never click
/// and are equally valid inputs everywhere in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    states: Vec<BlochVector>,
    priors: Vec<f64>,
    tolerance: f64,
}

impl Problem {
    pub fn new(states: Vec<BlochVector>, priors: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(states, priors, DEFAULT_TOL)
    }

    pub fn with_tolerance(
        states: Vec<BlochVector>,
        priors: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if states.len() != priors.len() {
            return Err(Error::ShapeError(format!(
                "{} states but {} priors",
                states.len(),
                priors.len()
            )));
        }
        if states.len() < 2 {
            return Err(Error::ShapeError(
                "a discrimination instance needs at least two states".into(),
            ));
        }
        for (j, p) in priors.iter().enumerate() {
            if !p.is_finite() || *p <= 0.0 {
                return Err(Error::InvalidPriors(format!("p_{j} = {p}, want > 0")));
            }
        }
        let total: f64 = priors.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidPriors(format!(
                "priors sum to {total}, want <= 1"
            )));
        }
        for beta in &states {
            beta.validate_pure(tolerance.max(DEFAULT_TOL))?;
        }
        Ok(Self {
            states,
            priors,
            tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BlochVector] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn state(&self, j: usize) -> &BlochVector {
        &self.states[j]
    }

    pub fn prior(&self, j: usize) -> f64 {
        self.priors[j]
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn prior_sum(&self) -> f64 {
        self.priors.iter().sum()
    }

    pub fn max_prior(&self) -> f64 {
        self.priors.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Whether the instance carries the full prior mass (`sum p = 1`).
    pub fn is_normalized(&self) -> bool {
        (self.prior_sum() - 1.0).abs() <= 1e-9
    }

    pub fn density(&self, j: usize) -> Result<DensityMatrix> {
        density_from_bloch(&self.states[j])
    }

    pub fn rotate(&self, r: &Rotation) -> Self {
        Self {
            states: self.states.iter().map(|b| r.apply(b)).collect(),
            priors: self.priors.clone(),
            tolerance: self.tolerance,
        }
    }

    /// Restriction to a subset of the states, keeping their priors.
    pub fn subproblem(&self, subset: &[usize]) -> Result<Self> {
        let states = subset.iter().map(|&j| self.states[j]).collect();
        let priors = subset.iter().map(|&j| self.priors[j]).collect();
        Self::with_tolerance(states, priors, self.tolerance)
    }
}
