//! Seeded random instances: states, rotations, problems, POVMs.
//!
//! Used by tests and by the admissibility sampling of the inverse solver.
//! All generators take an explicit `Rng` so callers stay deterministic.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::bloch::{BlochVector, BLOCH_RADIUS};
use crate::povm::{Povm, PovmElement};
use crate::problem::Problem;

/// Uniform direction on the unit sphere.
pub fn unit_vector<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Uniform pure state on the Bloch sphere.
pub fn random_state<R: Rng>(rng: &mut R) -> BlochVector {
    BlochVector::from_vector(unit_vector(rng) * BLOCH_RADIUS)
}

/// Uniform point on the probability simplex (priors summing to one).
pub fn random_priors<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12..1.0f64).ln()).collect();
        let total: f64 = draws.iter().sum();
        let priors: Vec<f64> = draws.iter().map(|d| d / total).collect();
        // Keep instances numerically benign.
        if priors.iter().all(|&p| p > 1e-3) {
            return priors;
        }
    }
}

/// Random problem with `n` pairwise-distinct states and random priors.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize) -> Problem {
    loop {
        let states: Vec<BlochVector> = (0..n).map(|_| random_state(rng)).collect();
        let distinct = states
            .iter()
            .enumerate()
            .all(|(i, a)| states[..i].iter().all(|b| a.distance(b) > 1e-3));
        if !distinct {
            continue;
        }
        let priors = random_priors(rng, n);
        return Problem::new(states, priors).unwrap();
    }
}

/// Random valid POVM with `m` elements (2 <= m <= 4), all frequencies
/// strictly positive.
pub fn random_povm<R: Rng>(rng: &mut R, m: usize) -> Povm {
    assert!((2..=4).contains(&m), "m = {m} out of range 2..=4");
    match m {
        2 => {
            let g = unit_vector(rng) * BLOCH_RADIUS;
            Povm::new(vec![
                PovmElement::new(1.0, BlochVector::from_vector(g)),
                PovmElement::new(1.0, BlochVector::from_vector(-g)),
            ])
        }
        3 => loop {
            // Plane through the origin spanned by (u, v); three directions in
            // it whose positive hull contains the origin.
            let u = unit_vector(rng);
            let mut v = unit_vector(rng);
            v -= u * v.dot(&u);
            if v.norm() < 1e-3 {
                continue;
            }
            v.normalize_mut();
            let mut angles: Vec<f64> = (0..3)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let gaps = [
                angles[1] - angles[0],
                angles[2] - angles[1],
                std::f64::consts::TAU - (angles[2] - angles[0]),
            ];
            if gaps.iter().any(|&g| g >= std::f64::consts::PI - 1e-3) {
                continue;
            }
            let dirs: Vec<Vector3<f64>> = angles
                .iter()
                .map(|a| (u * a.cos() + v * a.sin()) * BLOCH_RADIUS)
                .collect();
            let m3 = Matrix3::from_fn(|r, c| match r {
                0 => dirs[c].dot(&u),
                1 => dirs[c].dot(&v),
                _ => 1.0,
            });
            let Some(omega) = m3.lu().solve(&Vector3::new(0.0, 0.0, 2.0)) else {
                continue;
            };
            if omega.iter().any(|&w| w < 1e-3) {
                continue;
            }
            return Povm::new(
                dirs.iter()
                    .zip(omega.iter())
                    .map(|(d, &w)| PovmElement::new(w, BlochVector::from_vector(*d)))
                    .collect(),
            );
        },
        _ => loop {
            let dirs: Vec<Vector3<f64>> =
                (0..4).map(|_| unit_vector(rng) * BLOCH_RADIUS).collect();
            let m4 = nalgebra::Matrix4::from_fn(|r, c| if r < 3 { dirs[c][r] } else { 1.0 });
            let rhs = nalgebra::Vector4::new(0.0, 0.0, 0.0, 2.0);
            let Some(omega) = m4.lu().solve(&rhs) else {
                continue;
            };
            if omega.iter().any(|&w| w < 1e-2) {
                continue;
            }
            return Povm::new(
                dirs.iter()
                    .zip(omega.iter())
                    .map(|(d, &w)| PovmElement::new(w, BlochVector::from_vector(*d)))
                    .collect(),
            );
        },
    }
}
