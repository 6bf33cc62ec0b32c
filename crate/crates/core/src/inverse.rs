//! Inverse optimization: states and priors for which a given POVM is optimal.
//!
//! Given a valid POVM and a free vector `R`, set
//! `q_j = (1/4 + (2 gamma_j + R) . R) / (1/2 + 2 gamma_j . R)`,
//! `A = 1 / sum q_j`, `p_j = A q_j`, and
//! `beta_j = ((1 - q_j) gamma_j + R) / q_j`.
//! The construction guarantees `|beta_j| = 1/2` algebraically and makes the
//! POVM satisfy the optimality conditions with success probability `A`; both
//! facts are still verified numerically, since an inadmissible `R` (outside
//! the region where all priors stay positive and below `A`) shows up exactly
//! there.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochVector, BLOCH_RADIUS};
use crate::certificate::certify;
use crate::error::{Error, Result};
use crate::povm::Povm;
use crate::problem::Problem;
use crate::solver::{solve, Solution};

/// A generated instance together with the intermediates of the construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseResult {
    pub problem: Problem,
    /// The optimal success probability of the generated instance.
    pub a_value: f64,
    /// The intermediates `q_j = p_j / A`.
    pub q: Vec<f64>,
    pub r_vector: [f64; 3],
}

/// Builds the instance for which `povm` is a minimum-error optimal
/// measurement, if `R` is admissible.
pub fn inverse(povm: &Povm, r: &Vector3<f64>) -> Result<InverseResult> {
    povm.validate(crate::bloch::DEFAULT_TOL)?;
    if povm.elements.iter().any(|e| e.omega <= 0.0) {
        return Err(Error::ShapeError(
            "inverse construction needs every element clicking (omega > 0)".into(),
        ));
    }

    let mut q = Vec::with_capacity(povm.len());
    for (j, element) in povm.elements.iter().enumerate() {
        let gamma = element.gamma.vector();
        let denom = 0.5 + 2.0 * gamma.dot(r);
        if denom.abs() < 1e-9 {
            return Err(Error::DenominatorVanishes(j));
        }
        let qj = (0.25 + (2.0 * gamma + r).dot(r)) / denom;
        if qj <= 0.0 {
            return Err(Error::NonPositivePrior(j));
        }
        q.push(qj);
    }
    let f: f64 = q.iter().sum();
    let a = 1.0 / f;

    let mut states = Vec::with_capacity(povm.len());
    let mut priors = Vec::with_capacity(povm.len());
    for (j, (element, &qj)) in povm.elements.iter().zip(&q).enumerate() {
        let p = a * qj;
        if !(p > 0.0 && p < 1.0) || qj >= 1.0 {
            return Err(Error::NonPositivePrior(j));
        }
        let beta = (element.gamma.vector() * (1.0 - qj) + r) / qj;
        if (beta.norm() - BLOCH_RADIUS).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "constructed state {j} has Bloch length {}",
                beta.norm()
            )));
        }
        states.push(BlochVector::from_vector(beta));
        priors.push(p);
    }

    let problem = Problem::new(states, priors)?;
    let certificate = certify(&problem, povm)?;
    if !certificate.passed {
        return Err(Error::CertificateFailed);
    }
    Ok(InverseResult {
        problem,
        a_value: a,
        q,
        r_vector: [r.x, r.y, r.z],
    })
}

/// Composes [`inverse`] with the direct solver on the generated instance.
/// Succeeds when the solver's certified optimum matches `a_value`.
pub fn round_trip(povm: &Povm, r: &Vector3<f64>) -> Result<(InverseResult, Solution)> {
    let generated = inverse(povm, r)?;
    let solution = solve(&generated.problem)?;
    if (solution.p_corr - generated.a_value).abs() > 1e-8 {
        return Err(Error::SolverFailure(format!(
            "round trip mismatch: solver {} vs construction {}",
            solution.p_corr, generated.a_value
        )));
    }
    Ok((generated, solution))
}

/// Rejection-samples a vector `R` (uniform in the ball of radius 0.4) until
/// the construction succeeds for `povm`.
pub fn sample_admissible_r<R: Rng>(rng: &mut R, povm: &Povm) -> Vector3<f64> {
    loop {
        let r = loop {
            let v = Vector3::new(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
            );
            if v.norm() <= 0.4 {
                break v;
            }
        };
        if inverse(povm, &r).is_ok() {
            return r;
        }
    }
}
