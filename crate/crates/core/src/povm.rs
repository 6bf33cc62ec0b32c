//! POVMs built from weighted rank-1 projectors.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochVector, Rotation, DEFAULT_TOL};
use crate::error::{Error, Result};

/// One POVM element `omega * pi`, with `pi` the rank-1 projector in direction
/// `gamma` (length 1/2 on the Bloch sphere).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PovmElement {
    pub omega: f64,
    pub gamma: BlochVector,
}

impl PovmElement {
    pub fn new(omega: f64, gamma: BlochVector) -> Self {
        Self { omega, gamma }
    }

    /// The projector `pi = (1/2) I + gamma . sigma` as a complex matrix.
    pub fn projector(&self) -> Matrix2<Complex64> {
        let g = self.gamma;
        Matrix2::new(
            Complex64::new(0.5 + g.z, 0.0),
            Complex64::new(g.x, -g.y),
            Complex64::new(g.x, g.y),
            Complex64::new(0.5 - g.z, 0.0),
        )
    }

    /// Probability that this element clicks on the pure state `beta`:
    /// `tr(rho pi_hat) = omega (1/2 + 2 beta . gamma)`.
    pub fn click_probability(&self, beta: &BlochVector) -> f64 {
        self.omega * (0.5 + 2.0 * beta.dot(&self.gamma))
    }
}

/// A positive operator-valued measure: elements `omega_j pi_j` resolving the
/// identity, i.e. `sum omega_j = 2` and `sum omega_j gamma_j = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    pub elements: Vec<PovmElement>,
}

impl Povm {
    pub fn new(elements: Vec<PovmElement>) -> Self {
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for (j, e) in self.elements.iter().enumerate() {
            if e.omega < -tol {
                return Err(Error::NegativeFrequency {
                    index: j,
                    omega: e.omega,
                });
            }
            let len = e.gamma.norm();
            if (len - 0.5).abs() > tol {
                return Err(Error::NonProjectorElement { index: j, length: len });
            }
        }
        let total: f64 = self.elements.iter().map(|e| e.omega).sum();
        if (total - 2.0).abs() > tol {
            return Err(Error::CompletenessViolation(format!(
                "sum of frequencies is {total}, want 2"
            )));
        }
        let mut resultant = BlochVector::new(0.0, 0.0, 0.0);
        for e in &self.elements {
            resultant = resultant.add(&e.gamma.scale(e.omega));
        }
        if resultant.norm() > tol {
            return Err(Error::CompletenessViolation(format!(
                "sum of omega_j gamma_j has length {}, want 0",
                resultant.norm()
            )));
        }
        Ok(())
    }

    /// Indices of elements with strictly positive frequency.
    pub fn active_indices(&self) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.omega > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn rotate(&self, r: &Rotation) -> Self {
        Self::new(
            self.elements
                .iter()
                .map(|e| PovmElement::new(e.omega, r.apply(&e.gamma)))
                .collect(),
        )
    }
}

/// Checks the resolution-of-identity constraints at the default tolerance.
pub fn validate_povm(povm: &Povm) -> Result<()> {
    povm.validate(DEFAULT_TOL)
}

/// The trine POVM: three coplanar directions at 120 degrees, omega = 2/3 each.
pub fn trine_povm() -> Povm {
    Povm::new(
        trine_states()
            .iter()
            .map(|g| PovmElement::new(2.0 / 3.0, *g))
            .collect(),
    )
}

/// The trine state triple in the z = 0 plane.
pub fn trine_states() -> [BlochVector; 3] {
    let s = 3.0f64.sqrt() / 4.0;
    [
        BlochVector::new(0.5, 0.0, 0.0),
        BlochVector::new(-0.25, s, 0.0),
        BlochVector::new(-0.25, -s, 0.0),
    ]
}
