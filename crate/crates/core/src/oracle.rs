//! Derivative-free brute-force maximizer of the success probability.
//!
//! The oracle is an independent lower-bound witness: it never uses the
//! optimality conditions, only the success-probability formula, so agreement
//! with the certified solver is meaningful evidence.
//!
//! Every candidate support (which states click) is optimized separately and
//! the best feasible measurement wins:
//! - pairs: the two elements are antipodal with unit frequencies, and the
//!   value is linear in the shared direction, so the maximizer is exact;
//! - triples: the directions must be coplanar through the center, so the
//!   search runs over a plane normal and three in-plane angles, with the
//!   frequencies solved from the completeness constraints and proposals
//!   rejected when any frequency turns negative;
//! - quadruples: four free directions, frequencies from the exact 4x4
//!   completeness solve, infeasible proposals rejected.
//!
//! Triples and quadruples use restarted hill climbing with shrinking random
//! perturbations.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{BlochVector, BLOCH_RADIUS};
use crate::povm::{Povm, PovmElement};
use crate::problem::Problem;
use crate::random::unit_vector;

/// Search-budget knobs for [`oracle_optimize`]. Identical config and problem
/// give bit-identical output.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Cap on clicking elements, clamped to `[2, 8]`; qubit optima never need
    /// more than four, so values above four change nothing.
    pub max_elements: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Initial perturbation size, in Bloch-ball units.
    pub initial_step: f64,
    /// Per-iteration multiplicative step decay.
    pub step_shrink: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_elements: 4,
            restarts: 16,
            iterations: 2000,
            seed: 0,
            initial_step: 0.4,
            step_shrink: 0.9926,
        }
    }
}

impl OracleConfig {
    /// A reduced budget for test suites that call the oracle many times.
    pub fn quick(seed: u64) -> Self {
        Self {
            restarts: 6,
            iterations: 800,
            seed,
            ..Self::default()
        }
    }
}

/// One scored candidate over a support.
struct Scored {
    p: f64,
    support: Vec<usize>,
    gammas: Vec<Vector3<f64>>,
    omegas: Vec<f64>,
}

fn support_value(
    problem: &Problem,
    support: &[usize],
    gammas: &[Vector3<f64>],
    omegas: &[f64],
) -> f64 {
    support
        .iter()
        .zip(gammas)
        .zip(omegas)
        .map(|((&j, g), &w)| {
            problem.prior(j) * w * (0.5 + 2.0 * problem.state(j).vector().dot(g))
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Pairs: exact.
// ---------------------------------------------------------------------------

/// The best pair measurement on `(i, j)`: value
/// `p_i/2 + p_j/2 + 2 d . (p_i beta_i - p_j beta_j)` over antipodal `+-d`,
/// maximized exactly by aligning `d` with the weighted difference.
fn best_pair(problem: &Problem, i: usize, j: usize) -> Scored {
    let weighted =
        problem.state(i).vector() * problem.prior(i) - problem.state(j).vector() * problem.prior(j);
    let d = if weighted.norm() > 1e-12 {
        weighted.normalize() * BLOCH_RADIUS
    } else {
        Vector3::z() * BLOCH_RADIUS
    };
    let gammas = vec![d, -d];
    let omegas = vec![1.0, 1.0];
    let support = vec![i, j];
    let p = support_value(problem, &support, &gammas, &omegas);
    Scored {
        p,
        support,
        gammas,
        omegas,
    }
}

// ---------------------------------------------------------------------------
// Triples: plane normal + three angles.
// ---------------------------------------------------------------------------

/// Orthonormal in-plane frame for a unit normal.
fn plane_frame(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let probe = if normal.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = (probe - normal * probe.dot(normal)).normalize();
    (u, normal.cross(&u))
}

/// Evaluates a triple parametrized by plane normal and in-plane angles;
/// `None` when the completeness system is infeasible (some frequency < 0).
fn eval_triple(
    problem: &Problem,
    support: &[usize; 3],
    normal: &Vector3<f64>,
    angles: &[f64; 3],
) -> Option<Scored> {
    let (u, v) = plane_frame(normal);
    let gammas: Vec<Vector3<f64>> = angles
        .iter()
        .map(|a| (u * a.cos() + v * a.sin()) * BLOCH_RADIUS)
        .collect();
    let m = Matrix3::from_fn(|r, c| match r {
        0 => gammas[c].dot(&u),
        1 => gammas[c].dot(&v),
        _ => 1.0,
    });
    if m.determinant().abs() < 1e-10 {
        return None;
    }
    let omega = m.lu().solve(&Vector3::new(0.0, 0.0, 2.0))?;
    if omega.iter().any(|&w| w < 0.0) {
        return None;
    }
    let omegas: Vec<f64> = omega.iter().cloned().collect();
    let p = support_value(problem, support, &gammas, &omegas);
    Some(Scored {
        p,
        support: support.to_vec(),
        gammas,
        omegas,
    })
}

/// Best-fit unit normal for the planes spanned by three state directions.
fn states_plane_normal(problem: &Problem, support: &[usize; 3]) -> Vector3<f64> {
    let d: Vec<Vector3<f64>> = support
        .iter()
        .map(|&j| problem.state(j).vector())
        .collect();
    let crosses = [d[0].cross(&d[1]), d[1].cross(&d[2]), d[2].cross(&d[0])];
    let reference = crosses
        .iter()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .copied()
        .unwrap();
    if reference.norm() < 1e-9 {
        return Vector3::z();
    }
    let mut total = Vector3::zeros();
    for c in &crosses {
        total += if c.dot(&reference) >= 0.0 { *c } else { -c };
    }
    if total.norm() < 1e-9 {
        Vector3::z()
    } else {
        total.normalize()
    }
}

fn climb_triple(
    problem: &Problem,
    support: &[usize; 3],
    config: &OracleConfig,
    rng: &mut ChaCha8Rng,
    seeded: bool,
) -> Option<Scored> {
    let mut normal;
    let mut angles;
    let mut current = None;
    // A feasible start: either the states' own plane with the first state's
    // in-plane angle and 120-degree spacing (always feasible), or random
    // draws.
    for attempt in 0..60 {
        if seeded && attempt == 0 {
            normal = states_plane_normal(problem, support);
            let (u, v) = plane_frame(&normal);
            let first = problem.state(support[0]).vector();
            let base = first.dot(&v).atan2(first.dot(&u));
            angles = [
                base,
                base + 2.0 * std::f64::consts::FRAC_PI_3,
                base + 4.0 * std::f64::consts::FRAC_PI_3,
            ];
        } else {
            normal = unit_vector(rng);
            let base = rng.gen_range(0.0..std::f64::consts::TAU);
            let g1 = rng.gen_range(0.3..std::f64::consts::PI - 0.05);
            let g2 = rng.gen_range(0.3..std::f64::consts::PI - 0.05);
            angles = [base, base + g1, base + g1 + g2];
        }
        if let Some(s) = eval_triple(problem, support, &normal, &angles) {
            current = Some((s, normal, angles));
            break;
        }
    }
    let (mut best, mut normal, mut angles) = current?;

    let mut step = config.initial_step;
    for iter in 0..config.iterations {
        let which = iter % 4;
        let (trial_normal, trial_angles) = if which == 3 {
            let n = (normal + unit_vector(rng) * (step * rng.gen::<f64>())).normalize();
            (n, angles)
        } else {
            let mut a = angles;
            a[which] += step * rng.gen_range(-1.0..1.0) * 2.0;
            (normal, a)
        };
        if let Some(s) = eval_triple(problem, support, &trial_normal, &trial_angles) {
            if s.p > best.p {
                best = s;
                normal = trial_normal;
                angles = trial_angles;
            }
        }
        step *= config.step_shrink;
    }
    Some(best)
}

// ---------------------------------------------------------------------------
// Quadruples: four free directions.
// ---------------------------------------------------------------------------

fn eval_quad(
    problem: &Problem,
    support: &[usize; 4],
    directions: &[Vector3<f64>; 4],
) -> Option<Scored> {
    let m = Matrix4::from_fn(|r, c| if r < 3 { directions[c][r] } else { 1.0 });
    if m.determinant().abs() < 1e-10 {
        return None;
    }
    let omega = m.lu().solve(&Vector4::new(0.0, 0.0, 0.0, 2.0))?;
    if omega.iter().any(|&w| w < 0.0) {
        return None;
    }
    let gammas: Vec<Vector3<f64>> = directions.to_vec();
    let omegas: Vec<f64> = omega.iter().cloned().collect();
    let p = support_value(problem, support, &gammas, &omegas);
    Some(Scored {
        p,
        support: support.to_vec(),
        gammas,
        omegas,
    })
}

fn climb_quad(
    problem: &Problem,
    support: &[usize; 4],
    config: &OracleConfig,
    rng: &mut ChaCha8Rng,
    seeded: bool,
) -> Option<Scored> {
    let tetra: [Vector3<f64>; 4] = {
        let s = BLOCH_RADIUS / 3.0f64.sqrt();
        [
            Vector3::new(s, s, s),
            Vector3::new(s, -s, -s),
            Vector3::new(-s, s, -s),
            Vector3::new(-s, -s, s),
        ]
    };
    let mut current = None;
    for attempt in 0..60 {
        let directions: [Vector3<f64>; 4] = if seeded && attempt == 0 {
            let states: Vec<Vector3<f64>> = support
                .iter()
                .map(|&j| problem.state(j).vector())
                .collect();
            [states[0], states[1], states[2], states[3]]
        } else if seeded && attempt == 1 {
            tetra
        } else {
            let r = crate::bloch::Rotation::random(rng);
            [
                r.apply_vector(&tetra[0]),
                r.apply_vector(&tetra[1]),
                r.apply_vector(&tetra[2]),
                r.apply_vector(&tetra[3]),
            ]
        };
        if let Some(s) = eval_quad(problem, support, &directions) {
            current = Some((s, directions));
            break;
        }
    }
    let (mut best, mut directions) = current?;

    let mut step = config.initial_step;
    for iter in 0..config.iterations {
        let target = iter % 4;
        let perturbed =
            directions[target] + unit_vector(rng) * (step * rng.gen::<f64>());
        if perturbed.norm() < 1e-9 {
            continue;
        }
        let mut trial = directions;
        trial[target] = perturbed.normalize() * BLOCH_RADIUS;
        if let Some(s) = eval_quad(problem, support, &trial) {
            if s.p > best.p {
                best = s;
                directions = trial;
            }
        }
        step *= config.step_shrink;
    }
    Some(best)
}

// ---------------------------------------------------------------------------
// Driver.
// ---------------------------------------------------------------------------

fn padded(problem: &Problem, scored: &Scored) -> Povm {
    let mut elements: Vec<PovmElement> = problem
        .states()
        .iter()
        .map(|b| PovmElement::new(0.0, *b))
        .collect();
    for ((&j, g), &w) in scored.support.iter().zip(&scored.gammas).zip(&scored.omegas) {
        elements[j] = PovmElement::new(w, BlochVector::from_vector(*g));
    }
    Povm::new(elements)
}

/// Maximizes the success probability over all measurements by optimizing
/// each support independently. Always returns the best feasible measurement
/// found, padded to one element per state, with its success probability.
pub fn oracle_optimize(problem: &Problem, config: &OracleConfig) -> (Povm, f64) {
    let n = problem.len();
    let max_support = config.max_elements.clamp(2, 8).min(4).min(n);
    let mut best: Option<Scored> = None;
    let mut consider = |s: Scored| {
        if best.as_ref().is_none_or(|b| s.p > b.p) {
            best = Some(s);
        }
    };

    for i in 0..n {
        for j in (i + 1)..n {
            consider(best_pair(problem, i, j));
        }
    }

    let mut stream = 0u64;
    if max_support >= 3 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for restart in 0..config.restarts.max(1) {
                        stream += 1;
                        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                        rng.set_stream(stream);
                        if let Some(s) =
                            climb_triple(problem, &[i, j, k], config, &mut rng, restart == 0)
                        {
                            consider(s);
                        }
                    }
                }
            }
        }
    }

    if max_support >= 4 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        for restart in 0..config.restarts.max(1) {
                            stream += 1;
                            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                            rng.set_stream(stream);
                            if let Some(s) = climb_quad(
                                problem,
                                &[i, j, k, l],
                                config,
                                &mut rng,
                                restart == 0,
                            ) {
                                consider(s);
                            }
                        }
                    }
                }
            }
        }
    }

    let found = best.expect("pair supports always evaluate");
    (padded(problem, &found), found.p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::{trine_states, validate_povm};
    use approx::assert_abs_diff_eq;

    #[test]
    fn helstrom_two_state_value() {
        let problem = Problem::new(
            vec![
                BlochVector::new(0.5, 0.0, 0.0),
                BlochVector::new(0.0, 0.5, 0.0),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let (povm, p) = oracle_optimize(&problem, &OracleConfig::quick(1));
        validate_povm(&povm).unwrap();
        let expect = 0.5 + 0.5 / std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(p, expect, epsilon = 1e-9);
    }

    #[test]
    fn trine_value() {
        let problem =
            Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap();
        let (povm, p) = oracle_optimize(&problem, &OracleConfig::quick(2));
        validate_povm(&povm).unwrap();
        assert_abs_diff_eq!(p, 2.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn tetrahedron_value() {
        let s = 0.5 / 3.0f64.sqrt();
        let problem = Problem::new(
            vec![
                BlochVector::new(s, s, s),
                BlochVector::new(s, -s, -s),
                BlochVector::new(-s, s, -s),
                BlochVector::new(-s, -s, s),
            ],
            vec![0.25; 4],
        )
        .unwrap();
        let (_, p) = oracle_optimize(&problem, &OracleConfig::quick(3));
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn deterministic_given_seed() {
        let problem =
            Problem::new(trine_states().to_vec(), vec![0.5, 0.3, 0.2]).unwrap();
        let config = OracleConfig::quick(7);
        let (povm_a, p_a) = oracle_optimize(&problem, &config);
        let (povm_b, p_b) = oracle_optimize(&problem, &config);
        assert_eq!(p_a.to_bits(), p_b.to_bits());
        for (a, b) in povm_a.elements.iter().zip(&povm_b.elements) {
            assert_eq!(a.omega.to_bits(), b.omega.to_bits());
            assert_eq!(a.gamma.x.to_bits(), b.gamma.x.to_bits());
        }
    }

    #[test]
    fn output_is_always_a_valid_povm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..=5 {
            let problem = crate::random::random_problem(&mut rng, n);
            let (povm, p) = oracle_optimize(&problem, &OracleConfig::quick(n as u64));
            validate_povm(&povm).unwrap();
            assert!(p >= problem.max_prior() - 1e-6, "p = {p} below guessing");
            assert!(p <= 1.0 + 1e-12);
        }
    }
}
