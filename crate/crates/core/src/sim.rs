//! Seeded Monte-Carlo simulation of a discrimination experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::Povm;
use crate::problem::Problem;

/// Outcome statistics of a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub successes: u64,
    pub empirical_rate: f64,
    /// Binomial standard error `sqrt(P (1 - P) / trials)` at the empirical
    /// rate.
    pub std_error: f64,
}

/// Draws an index from a nonnegative weight vector summing to `total`.
fn draw_index<R: Rng>(rng: &mut R, weights: &[f64], total: f64) -> usize {
    let mut u = rng.gen_range(0.0..total);
    for (j, &w) in weights.iter().enumerate() {
        if u < w {
            return j;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Runs `trials` rounds: draw a state by the priors, draw an outcome by the
/// Born rule, count label matches. Deterministic given the seed.
///
/// Requires a normalized problem (full prior mass) and a POVM with one
/// element per state; per-state outcome distributions are verified to
/// normalize before any sampling.
pub fn simulate(problem: &Problem, povm: &Povm, trials: u64, seed: u64) -> Result<SimReport> {
    povm.validate(problem.tolerance())?;
    if problem.len() != povm.len() {
        return Err(Error::ShapeError(format!(
            "{} states but {} POVM elements",
            problem.len(),
            povm.len()
        )));
    }
    if trials == 0 {
        return Err(Error::ShapeError("trials must be >= 1".into()));
    }
    if !problem.is_normalized() {
        return Err(Error::InvalidPriors(format!(
            "simulation needs the full prior mass, got sum {}",
            problem.prior_sum()
        )));
    }

    // Outcome table: row i holds the outcome distribution for state i.
    let n = problem.len();
    let mut outcome: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = povm
            .elements
            .iter()
            .map(|e| e.click_probability(problem.state(i)).max(0.0))
            .collect();
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::CompletenessViolation(format!(
                "outcome probabilities for state {i} sum to {total}"
            )));
        }
        outcome.push(row);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let priors = problem.priors();
    let prior_total = problem.prior_sum();
    let mut successes = 0u64;
    for _ in 0..trials {
        let i = draw_index(&mut rng, priors, prior_total);
        let j = draw_index(&mut rng, &outcome[i], 1.0);
        if i == j {
            successes += 1;
        }
    }
    let empirical_rate = successes as f64 / trials as f64;
    Ok(SimReport {
        trials,
        successes,
        empirical_rate,
        std_error: (empirical_rate * (1.0 - empirical_rate) / trials as f64).sqrt(),
    })
}
