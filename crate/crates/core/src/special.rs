//! Closed-form classifiers and solutions for symmetric configurations:
//! three equiprobable states, the structure of N equiprobable states,
//! two-of-three equal priors (mirror-symmetric and equatorial-third
//! families), and a symmetric four-state family. Everything here is
//! cross-validated against the general solver in tests.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bloch::BlochVector;
use crate::certificate::certify;
use crate::cost::success_probability;
use crate::error::{Error, Result};
use crate::geometry::{common_difference_normal, origin_hull_weights};
use crate::povm::{Povm, PovmElement};
use crate::problem::Problem;
use crate::solver::{solve, solve_two, Classification, Solution};

/// Inequality values within this band of zero are treated as non-strict, so
/// boundary configurations classify as projective/absorbable.
const BOUNDARY_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Three equiprobable states.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeEqKind {
    /// All three cyclic inequalities strict: three clicking elements.
    Generalized,
    /// A violated inequality names the pair whose projective discrimination
    /// is optimal.
    ProjectivePair(usize, usize),
}

/// Outcome of the three-equiprobable-state classifier, with the raw values
/// of the three cyclic inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeEqClassification {
    pub kind: ThreeEqKind,
    /// `(b1+b2).(b3-b1)`, `(b3+b1).(b2-b3)`, `(b2+b3).(b1-b2)` in order;
    /// the measurement is generalized iff all are negative.
    pub inequality_values: [f64; 3],
}

fn require_distinct(states: &[&BlochVector]) -> Result<()> {
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            if a.distance(b) < 1e-9 {
                return Err(Error::DegenerateInput(format!(
                    "states {a:?} and {b:?} coincide"
                )));
            }
        }
    }
    Ok(())
}

/// Classifies the optimal measurement for three equiprobable pure states by
/// the three cyclic inequalities.
pub fn classify_three_equiprobable(
    b1: &BlochVector,
    b2: &BlochVector,
    b3: &BlochVector,
) -> Result<ThreeEqClassification> {
    require_distinct(&[b1, b2, b3])?;
    let values = [
        b1.add(b2).dot(&b3.sub(b1)),
        b3.add(b1).dot(&b2.sub(b3)),
        b2.add(b3).dot(&b1.sub(b2)),
    ];
    // Each inequality names the pair it concerns.
    let pairs = [(0usize, 1usize), (2, 0), (1, 2)];
    let kind = if values.iter().all(|&v| v < -BOUNDARY_TOL) {
        ThreeEqKind::Generalized
    } else {
        let worst = (0..3)
            .max_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
            .unwrap();
        ThreeEqKind::ProjectivePair(pairs[worst].0, pairs[worst].1)
    };
    Ok(ThreeEqClassification {
        kind,
        inequality_values: values,
    })
}

/// Foot of the perpendicular from the Bloch-ball center onto the plane of
/// three pure states; its length is the common offset of the states from the
/// parallel plane through the center.
pub fn perpendicular_foot(b1: &BlochVector, b2: &BlochVector, b3: &BlochVector) -> Vector3<f64> {
    let (v1, v2, v3) = (b1.vector(), b2.vector(), b3.vector());
    let normal_sum = v1.cross(&v2) + v2.cross(&v3) + v3.cross(&v1);
    let mixed = v1.dot(&v2.cross(&v3));
    normal_sum * (mixed / normal_sum.norm_squared())
}

/// Optimal discrimination of three equiprobable pure states, in closed form.
///
/// Generalized branch: the detector directions are the in-plane projections
/// of the states rescaled back to length 1/2, and
/// `P = (1/3)(1 + sqrt(1 - 4 d^2))` with `d` the plane offset. Projective
/// branch: the two-state optimum on the named pair, third state silent.
pub fn solve_three_equiprobable(
    b1: &BlochVector,
    b2: &BlochVector,
    b3: &BlochVector,
) -> Result<Solution> {
    let classification = classify_three_equiprobable(b1, b2, b3)?;
    let states = [*b1, *b2, *b3];
    let problem = Problem::new(states.to_vec(), vec![1.0 / 3.0; 3])?;

    match classification.kind {
        ThreeEqKind::ProjectivePair(i, j) => {
            let pair = solve_two(&states[i], &states[j], 1.0 / 3.0, 1.0 / 3.0)?;
            let mut elements: Vec<PovmElement> =
                states.iter().map(|b| PovmElement::new(0.0, *b)).collect();
            elements[i] = pair.povm.elements[0];
            elements[j] = pair.povm.elements[1];
            let povm = Povm::new(elements);
            let certificate = certify(&problem, &povm)?;
            if !certificate.passed {
                return Err(Error::CertificateFailed);
            }
            let p_corr = success_probability(&problem, &povm)?;
            Ok(Solution {
                povm,
                p_corr,
                classification: Classification::Projective(i, j),
                certificate,
                degenerate: false,
            })
        }
        ThreeEqKind::Generalized => {
            let foot = perpendicular_foot(b1, b2, b3);
            let d_sq = foot.norm_squared();
            let scale = (1.0 - 4.0 * d_sq).sqrt();
            if scale.is_nan() || scale <= 0.0 {
                return Err(Error::DegenerateInput(
                    "state plane tangent to the Bloch sphere".into(),
                ));
            }
            let gammas: Vec<Vector3<f64>> = states
                .iter()
                .map(|b| (b.vector() - foot) / scale)
                .collect();

            // Frequencies from completeness, solved in plane coordinates.
            let u = gammas[0].normalize();
            let normal = gammas[0].cross(&gammas[1]);
            if normal.norm() < 1e-12 {
                return Err(Error::SingularSystem);
            }
            let v = normal.normalize().cross(&u);
            let m = Matrix3::from_fn(|r, c| match r {
                0 => gammas[c].dot(&u),
                1 => gammas[c].dot(&v),
                _ => 1.0,
            });
            let omega = m
                .lu()
                .solve(&Vector3::new(0.0, 0.0, 2.0))
                .ok_or(Error::SingularSystem)?;
            for (j, &w) in omega.iter().enumerate() {
                if w < -BOUNDARY_TOL {
                    return Err(Error::NegativeFrequency { index: j, omega: w });
                }
            }

            let povm = Povm::new(
                gammas
                    .iter()
                    .zip(omega.iter())
                    .map(|(g, &w)| {
                        PovmElement::new(w.max(0.0), BlochVector::from_vector(*g))
                    })
                    .collect(),
            );
            let certificate = certify(&problem, &povm)?;
            if !certificate.passed {
                return Err(Error::CertificateFailed);
            }
            let p_corr = success_probability(&problem, &povm)?;
            debug_assert!((p_corr - (1.0 + scale) / 3.0).abs() < 1e-10);
            Ok(Solution {
                povm,
                p_corr,
                classification: Classification::Generalized3([0, 1, 2]),
                certificate,
                degenerate: false,
            })
        }
    }
}

/// Whether each extra state can be absorbed into the generalized
/// three-element optimum with zero frequency: true iff
/// `foot . (beta_extra - foot) >= 0` with `foot` the plane foot of the base
/// triple (boundary counts as absorbable).
pub fn extend_equiprobable(
    b1: &BlochVector,
    b2: &BlochVector,
    b3: &BlochVector,
    extras: &[BlochVector],
) -> Result<Vec<bool>> {
    let classification = classify_three_equiprobable(b1, b2, b3)?;
    if classification.kind != ThreeEqKind::Generalized {
        return Err(Error::ConfigMismatch(
            "extension test applies to generalized three-element optima".into(),
        ));
    }
    let foot = perpendicular_foot(b1, b2, b3);
    Ok(extras
        .iter()
        .map(|b| foot.dot(&(b.vector() - foot)) >= -BOUNDARY_TOL)
        .collect())
}

// ---------------------------------------------------------------------------
// N equiprobable states.
// ---------------------------------------------------------------------------

/// Structure of the optimum for `N >= 4` equiprobable states.
#[derive(Debug, Clone, PartialEq)]
pub enum NEqualStructure {
    /// The states themselves form a POVM (center in their convex hull):
    /// `pi_j = rho_j` with these frequencies is optimal, `P = 2/N`.
    StatesFormPovm(Vec<f64>),
    /// A direction orthogonal to every difference of states exists (the
    /// states share a circle); the optimum uses at most three elements.
    LatitudeReducible(Vector3<f64>),
    /// Neither condition holds: no N-element optimum exists; the general
    /// solver handles the instance.
    NoNontrivialB,
}

/// Classifies `N >= 4` equiprobable states per the structure theorem:
/// center-in-hull first (states form the POVM), then the rank test on the
/// difference set.
pub fn nequal_structure(states: &[BlochVector]) -> Result<NEqualStructure> {
    if states.len() < 4 {
        return Err(Error::ShapeError(format!(
            "structure theorem applies to N >= 4, got {}",
            states.len()
        )));
    }
    let refs: Vec<&BlochVector> = states.iter().collect();
    require_distinct(&refs)?;
    let points: Vec<Vector3<f64>> = states.iter().map(|b| b.vector()).collect();
    if let Some(weights) = origin_hull_weights(&points) {
        return Ok(NEqualStructure::StatesFormPovm(
            weights.iter().map(|w| 2.0 * w).collect(),
        ));
    }
    if let Some(direction) = common_difference_normal(&points) {
        return Ok(NEqualStructure::LatitudeReducible(direction));
    }
    Ok(NEqualStructure::NoNontrivialB)
}

// ---------------------------------------------------------------------------
// Two of three priors equal.
// ---------------------------------------------------------------------------

/// Prior thresholds bracketing the generalized-measurement regime of a
/// parametrized family; projective below `p_l` and above `p_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub p_l: f64,
    pub p_r: f64,
}

/// Parametrized triples with priors `(p, p, 1 - 2p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoOfThreeFamily {
    /// Two states mirror-symmetric about the z axis at polar parameter
    /// `theta`, third state at the pole:
    /// `b1 = (sin 2θ, 0, cos 2θ)/2`, `b2 = (-sin 2θ, 0, cos 2θ)/2`,
    /// `b3 = (0, 0, 1/2)`.
    MirrorSymmetric { theta: f64 },
    /// Two states mirror-symmetric in the x-z plane at height
    /// `sqrt(1-b^2)/2`, third on the equator:
    /// `b1 = (b, 0, sqrt(1-b^2))/2`, `b2 = (-b, 0, sqrt(1-b^2))/2`,
    /// `b3 = (1/2, 0, 0)`, with `b ∈ (0, 1)`.
    EquatorialThird { b: f64 },
}

impl TwoOfThreeFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            TwoOfThreeFamily::MirrorSymmetric { theta } => {
                if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::ConfigMismatch(format!(
                        "theta = {theta}, want 0 < theta < pi/2"
                    )));
                }
            }
            TwoOfThreeFamily::EquatorialThird { b } => {
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::ConfigMismatch(format!("b = {b}, want 0 < b < 1")));
                }
            }
        }
        Ok(())
    }

    pub fn states(&self) -> Result<[BlochVector; 3]> {
        self.validate()?;
        Ok(match *self {
            TwoOfThreeFamily::MirrorSymmetric { theta } => {
                let s = 0.5 * (2.0 * theta).sin();
                let c = 0.5 * (2.0 * theta).cos();
                [
                    BlochVector::new(s, 0.0, c),
                    BlochVector::new(-s, 0.0, c),
                    BlochVector::new(0.0, 0.0, 0.5),
                ]
            }
            TwoOfThreeFamily::EquatorialThird { b } => {
                let h = 0.5 * (1.0 - b * b).sqrt();
                [
                    BlochVector::new(0.5 * b, 0.0, h),
                    BlochVector::new(-0.5 * b, 0.0, h),
                    BlochVector::new(0.5, 0.0, 0.0),
                ]
            }
        })
    }

    /// The instance with priors `(p, p, 1 - 2p)`.
    pub fn problem(&self, p: f64) -> Result<Problem> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::InvalidPriors(format!("p = {p}, want 0 < p < 1/2")));
        }
        Problem::new(self.states()?.to_vec(), vec![p, p, 1.0 - 2.0 * p])
    }
}

/// Analytic prior thresholds for a two-of-three-equal family.
///
/// For the mirror-symmetric family only the upper flip exists (the two
/// symmetric elements carry equal frequencies and cannot vanish on their
/// own), so `p_l = 0`.
pub fn two_of_three_thresholds(family: &TwoOfThreeFamily) -> Result<ThresholdPair> {
    family.validate()?;
    Ok(match *family {
        TwoOfThreeFamily::MirrorSymmetric { theta } => ThresholdPair {
            p_l: 0.0,
            p_r: 2.0 / (5.0 + (2.0 * theta).cos() + (2.0 * theta).sin()),
        },
        TwoOfThreeFamily::EquatorialThird { b } => ThresholdPair {
            p_l: (b - 2.0 + (2.0 * b * (1.0 + b)).sqrt()) / (b * b + 6.0 * b - 4.0),
            p_r: 1.0 / (2.0 + b),
        },
    })
}

/// Closed-form frequencies of the equatorial-third family in the generalized
/// regime (cross-check for the linear-system route).
pub fn equatorial_third_frequencies(b: f64, p: f64) -> [f64; 3] {
    let front =
        (1.0 + p * (4.0 * (p - 1.0) + b * b * (5.0 * p - 2.0)))
            / (b * (1.0 + p * (-6.0 + (8.0 + b * b) * p)).powi(2));
    let omega1 = front * (-1.0 + p * (4.0 - 4.0 * p + b * (-2.0 + (6.0 + b) * p)));
    let omega2 = -front * (-1.0 + p * (4.0 - 4.0 * p + b * (2.0 + (-6.0 + b) * p)));
    [omega1, omega2, 2.0 - omega1 - omega2]
}

/// Closed-form optimal success probability of the equatorial-third family in
/// the generalized regime.
pub fn equatorial_third_value(b: f64, p: f64) -> f64 {
    2.0 * p * p * (1.0 - 2.0 * p) * (b * b - 1.0)
        / (1.0 - 6.0 * p + p * p * (8.0 + b * b))
}

// ---------------------------------------------------------------------------
// Symmetric four-state family.
// ---------------------------------------------------------------------------

/// The four-state family: `b1 = (b11, b12, 0)`, `b2 = (b11, -b12, 0)` with
/// priors `p` each, `b3 = (0, b32, b33)`, `b4 = (0, b32, -b33)` with priors
/// `1/2 - p` each, where `b12 = sqrt(1/4 - b11^2)`.
pub fn four_symmetric_problem(
    beta11: f64,
    beta32: f64,
    beta33: f64,
    p: f64,
) -> Result<Problem> {
    if !(beta11 > 0.0 && beta11 < 0.5) {
        return Err(Error::ConfigMismatch(format!(
            "beta11 = {beta11}, want 0 < beta11 < 1/2"
        )));
    }
    if !(beta32 >= 0.0 && beta33 > 0.0)
        || (beta32 * beta32 + beta33 * beta33 - 0.25).abs() > 1e-9
    {
        return Err(Error::ConfigMismatch(format!(
            "(beta32, beta33) = ({beta32}, {beta33}) not on the Bloch sphere"
        )));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::InvalidPriors(format!("p = {p}, want 0 < p < 1/2")));
    }
    let beta12 = (0.25 - beta11 * beta11).sqrt();
    Problem::new(
        vec![
            BlochVector::new(beta11, beta12, 0.0),
            BlochVector::new(beta11, -beta12, 0.0),
            BlochVector::new(0.0, beta32, beta33),
            BlochVector::new(0.0, beta32, -beta33),
        ],
        vec![p, p, 0.5 - p, 0.5 - p],
    )
}

/// Prior thresholds of the four-state family.
pub fn four_symmetric_thresholds(beta11: f64, beta32: f64) -> Result<ThresholdPair> {
    if !(beta11 > 0.0 && beta11 < 0.5) {
        return Err(Error::ConfigMismatch(format!(
            "beta11 = {beta11}, want 0 < beta11 < 1/2"
        )));
    }
    let beta12 = (0.25 - beta11 * beta11).sqrt();
    let p_r = (1.0 - 2.0 * beta12) / (8.0 * beta11 * beta11);
    let p_l = (beta12 - beta32
        + (beta12 * (beta12 + 2.0 * beta32 + 4.0 * beta12 * beta32 * beta32)).sqrt())
        / (8.0 * beta12 - 2.0 * beta32 + 8.0 * beta12 * beta12 * beta32);
    Ok(ThresholdPair { p_l, p_r })
}

/// Closed-form `(B1, A)` of the four-state family in the four-element regime.
pub fn four_symmetric_system(beta11: f64, p: f64) -> (f64, f64) {
    let b1 = 2.0 * p * beta11 * (1.0 - 6.0 * p + 8.0 * p * p)
        / (1.0 - 8.0 * p + 16.0 * p * p * (1.0 - beta11 * beta11));
    let a = 8.0 * p * beta11 * b1 / (4.0 * p - 1.0);
    (b1, a)
}

/// Closed-form frequencies of the four-state family in the four-element
/// regime (cross-check for the linear-system route).
pub fn four_symmetric_frequencies(beta11: f64, beta32: f64, p: f64) -> [f64; 4] {
    let beta12 = (0.25 - beta11 * beta11).sqrt();
    let front = (1.0 + 4.0 * p * (p - 1.0 + 4.0 * (3.0 * p - 1.0) * beta12 * beta12))
        / (beta12 * (1.0 + 4.0 * p * (-2.0 + p * (3.0 + 4.0 * beta12 * beta12))).powi(2));
    let shared = (-1.0 + 4.0 * p * (1.0 - 4.0 * p * beta11 * beta11)) * beta32;
    let omega1 = front * (4.0 * p * (4.0 * p - 1.0) * beta12 + shared);
    let omega2 = -front * (-4.0 * p * (4.0 * p - 1.0) * beta12 + shared);
    let omega34 = 1.0 - 0.5 * (omega1 + omega2);
    [omega1, omega2, omega34, omega34]
}

/// Solves the four-state family in closed form: four elements strictly
/// between the thresholds, the projective pair `(1, 2)` at and above `p_r`,
/// and the general solver below `p_l` (where state 1 falls silent).
pub fn four_symmetric_solve(
    beta11: f64,
    beta32: f64,
    beta33: f64,
    p: f64,
) -> Result<(Solution, ThresholdPair)> {
    let problem = four_symmetric_problem(beta11, beta32, beta33, p)?;
    let thresholds = four_symmetric_thresholds(beta11, beta32)?;
    let beta12 = (0.25 - beta11 * beta11).sqrt();

    if p >= thresholds.p_r - BOUNDARY_TOL {
        let pair = solve_two(problem.state(0), problem.state(1), p, p)?;
        let mut elements: Vec<PovmElement> = problem
            .states()
            .iter()
            .map(|b| PovmElement::new(0.0, *b))
            .collect();
        elements[0] = pair.povm.elements[0];
        elements[1] = pair.povm.elements[1];
        let povm = Povm::new(elements);
        let certificate = certify(&problem, &povm)?;
        if !certificate.passed {
            return Err(Error::CertificateFailed);
        }
        let p_corr = success_probability(&problem, &povm)?;
        debug_assert!((p_corr - p * (1.0 + 2.0 * beta12)).abs() < 1e-12);
        return Ok((
            Solution {
                povm,
                p_corr,
                classification: Classification::Projective(0, 1),
                certificate,
                degenerate: false,
            },
            thresholds,
        ));
    }

    if p <= thresholds.p_l + BOUNDARY_TOL {
        // The first element is silent here; the configuration loses the
        // symmetry the closed forms rely on, so use the general cascade.
        return Ok((solve(&problem)?, thresholds));
    }

    let (b1, a) = four_symmetric_system(beta11, p);
    let candidate = crate::solver::CandidateSystem {
        a,
        b: Vector3::new(b1, 0.0, 0.0),
        subset: vec![0, 1, 2, 3],
    };
    let omegas = crate::solver::frequencies_from_candidate(&problem, &candidate)?;
    let gammas = crate::solver::gamma_from_ab(&problem, &candidate.subset, a, candidate.b)?;
    let povm = Povm::new(
        gammas
            .iter()
            .zip(&omegas)
            .map(|(g, &w)| PovmElement::new(w, *g))
            .collect(),
    );
    let certificate = certify(&problem, &povm)?;
    if !certificate.passed {
        return Err(Error::CertificateFailed);
    }
    let p_corr = success_probability(&problem, &povm)?;
    debug_assert!((p_corr - a).abs() < 1e-10);
    Ok((
        Solution {
            povm,
            p_corr,
            classification: Classification::Generalized4([0, 1, 2, 3]),
            certificate,
            degenerate: false,
        },
        thresholds,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::trine_states;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    const INV_SQRT8: f64 = 0.35355339059327373; // 1/(2 sqrt 2)

    #[test]
    fn trine_classifies_generalized() {
        let s = trine_states();
        let c = classify_three_equiprobable(&s[0], &s[1], &s[2]).unwrap();
        assert_eq!(c.kind, ThreeEqKind::Generalized);
        for v in c.inequality_values {
            assert_abs_diff_eq!(v, -0.375, epsilon = 1e-12);
        }
    }

    #[test]
    fn near_parallel_triple_classifies_projective() {
        let b1 = BlochVector::new(0.5, 0.0, 0.0);
        let b2 = BlochVector::new(0.0, 0.5, 0.0);
        let q = std::f64::consts::SQRT_2 / 4.0;
        let b3 = BlochVector::new(q, q, 0.0);
        let c = classify_three_equiprobable(&b1, &b2, &b3).unwrap();
        assert_eq!(c.kind, ThreeEqKind::ProjectivePair(0, 1));
        assert_abs_diff_eq!(c.inequality_values[0], 0.5 * (2.0 * q - 0.5), epsilon = 1e-12);
        let sol = solve_three_equiprobable(&b1, &b2, &b3).unwrap();
        let expect = (1.0 + 0.5f64.sqrt()) / 3.0;
        assert_abs_diff_eq!(sol.p_corr, expect, epsilon = 1e-12);
        assert_eq!(sol.classification, Classification::Projective(0, 1));
    }

    #[test]
    fn duplicate_states_rejected() {
        let b1 = BlochVector::new(0.5, 0.0, 0.0);
        let b2 = BlochVector::new(0.0, 0.5, 0.0);
        assert!(matches!(
            classify_three_equiprobable(&b1, &b2, &b1),
            Err(Error::DegenerateInput(_))
        ));
    }

    fn lifted_trine() -> [BlochVector; 3] {
        let r = (0.25f64 - 0.09).sqrt();
        let mut out = [BlochVector::new(0.0, 0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let a = std::f64::consts::TAU * k as f64 / 3.0;
            *slot = BlochVector::new(r * a.cos(), r * a.sin(), 0.3);
        }
        out
    }

    #[test]
    fn lifted_trine_value_and_foot() {
        let s = lifted_trine();
        let foot = perpendicular_foot(&s[0], &s[1], &s[2]);
        assert_abs_diff_eq!(foot.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(foot.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(foot.z, 0.3, epsilon = 1e-12);
        let sol = solve_three_equiprobable(&s[0], &s[1], &s[2]).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn foot_is_orthogonal_projection_on_random_triples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let s: Vec<BlochVector> =
                (0..3).map(|_| crate::random::random_state(&mut rng)).collect();
            if s[0].distance(&s[1]) < 1e-3
                || s[1].distance(&s[2]) < 1e-3
                || s[0].distance(&s[2]) < 1e-3
            {
                continue;
            }
            let foot = perpendicular_foot(&s[0], &s[1], &s[2]);
            // The foot lies in the plane and is orthogonal to it.
            for b in &s {
                let in_plane = b.vector() - foot;
                assert_abs_diff_eq!(foot.dot(&in_plane), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn generalized_solution_matches_general_solver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 50 {
            let s: Vec<BlochVector> =
                (0..3).map(|_| crate::random::random_state(&mut rng)).collect();
            let Ok(c) = classify_three_equiprobable(&s[0], &s[1], &s[2]) else {
                continue;
            };
            let special = match solve_three_equiprobable(&s[0], &s[1], &s[2]) {
                Ok(sol) => sol,
                Err(_) => continue,
            };
            let problem = Problem::new(s.clone(), vec![1.0 / 3.0; 3]).unwrap();
            let general = solve(&problem).unwrap();
            assert_abs_diff_eq!(special.p_corr, general.p_corr, epsilon = 1e-10);
            if c.kind == ThreeEqKind::Generalized {
                for e in &special.povm.elements {
                    assert!(e.omega > 0.0);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn extension_of_lifted_trine() {
        let s = lifted_trine();
        let ok = extend_equiprobable(
            &s[0],
            &s[1],
            &s[2],
            &[
                BlochVector::new(0.0, 0.0, 0.5),
                BlochVector::new(0.0, 0.0, 0.2),
            ],
        )
        .unwrap();
        assert_eq!(ok, vec![true, false]);
    }

    #[test]
    fn trine_extension_boundary_is_absorbable() {
        let s = trine_states();
        let ok = extend_equiprobable(
            &s[0],
            &s[1],
            &s[2],
            &[BlochVector::new(0.0, -0.5, 0.0)],
        )
        .unwrap();
        assert_eq!(ok, vec![true]);
    }

    #[test]
    fn tetrahedron_structure() {
        let s = 0.5 / 3.0f64.sqrt();
        let states = vec![
            BlochVector::new(s, s, s),
            BlochVector::new(s, -s, -s),
            BlochVector::new(-s, s, -s),
            BlochVector::new(-s, -s, s),
        ];
        match nequal_structure(&states).unwrap() {
            NEqualStructure::StatesFormPovm(omegas) => {
                for w in omegas {
                    assert_abs_diff_eq!(w, 0.5, epsilon = 1e-9);
                }
            }
            other => panic!("expected StatesFormPovm, got {other:?}"),
        }
    }

    #[test]
    fn latitude_ring_structure() {
        let r = (0.25f64 - 0.09).sqrt();
        let states: Vec<BlochVector> = (0..4)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 4.0 + 0.2;
                BlochVector::new(r * a.cos(), r * a.sin(), 0.3)
            })
            .collect();
        match nequal_structure(&states).unwrap() {
            NEqualStructure::LatitudeReducible(direction) => {
                assert_abs_diff_eq!(direction.z.abs(), 1.0, epsilon = 1e-9);
            }
            other => panic!("expected LatitudeReducible, got {other:?}"),
        }
    }

    #[test]
    fn generic_cluster_has_no_structure() {
        let states = vec![
            BlochVector::new(0.1, 0.2, (0.25f64 - 0.05).sqrt()),
            BlochVector::new(-0.15, 0.1, (0.25f64 - 0.0325).sqrt()),
            BlochVector::new(0.05, -0.2, (0.25f64 - 0.0425).sqrt()),
            BlochVector::new(0.25, 0.05, (0.25f64 - 0.065).sqrt()),
        ];
        assert_eq!(nequal_structure(&states).unwrap(), NEqualStructure::NoNontrivialB);
    }

    #[test]
    fn mirror_symmetric_threshold_at_quarter_pi() {
        let t = two_of_three_thresholds(&TwoOfThreeFamily::MirrorSymmetric {
            theta: std::f64::consts::FRAC_PI_4,
        })
        .unwrap();
        assert_abs_diff_eq!(t.p_r, 1.0 / 3.0, epsilon = 1e-14);
        assert_eq!(t.p_l, 0.0);
    }

    #[test]
    fn equatorial_third_thresholds() {
        let t =
            two_of_three_thresholds(&TwoOfThreeFamily::EquatorialThird { b: 0.8 }).unwrap();
        assert_abs_diff_eq!(t.p_r, 1.0 / 2.8, epsilon = 1e-14);
        assert_abs_diff_eq!(t.p_l, (-1.2 + 2.88f64.sqrt()) / 1.44, epsilon = 1e-14);
    }

    #[test]
    fn equatorial_third_frequency_roots() {
        let b = 0.8;
        let t =
            two_of_three_thresholds(&TwoOfThreeFamily::EquatorialThird { b }).unwrap();
        let at_pr = equatorial_third_frequencies(b, t.p_r);
        assert_abs_diff_eq!(at_pr[2], 0.0, epsilon = 1e-12);
        let at_pl = equatorial_third_frequencies(b, t.p_l);
        assert_abs_diff_eq!(at_pl[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn equatorial_third_matches_general_solver_inside() {
        let b = 0.8;
        let family = TwoOfThreeFamily::EquatorialThird { b };
        let p = 0.35;
        let problem = family.problem(p).unwrap();
        let sol = solve(&problem).unwrap();
        assert_abs_diff_eq!(sol.p_corr, equatorial_third_value(b, p), epsilon = 1e-10);
        let closed = equatorial_third_frequencies(b, p);
        for (e, w) in sol.povm.elements.iter().zip(closed) {
            assert_abs_diff_eq!(e.omega, w, epsilon = 1e-8);
        }
    }

    #[test]
    fn four_symmetric_thresholds_canonical() {
        let t = four_symmetric_thresholds(INV_SQRT8, 0.0).unwrap();
        assert_abs_diff_eq!(t.p_l, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_r, 1.0 - 1.0 / std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn four_symmetric_middle_regime() {
        let p = 0.27;
        let (sol, t) = four_symmetric_solve(INV_SQRT8, 0.0, 0.5, p).unwrap();
        assert!(t.p_l < p && p < t.p_r);
        let (_, a) = four_symmetric_system(INV_SQRT8, p);
        assert_abs_diff_eq!(sol.p_corr, a, epsilon = 1e-12);
        assert_eq!(sol.classification, Classification::Generalized4([0, 1, 2, 3]));
        // Closed-form frequencies agree with the linear-system route.
        let closed = four_symmetric_frequencies(INV_SQRT8, 0.0, p);
        for (e, w) in sol.povm.elements.iter().zip(closed) {
            assert_abs_diff_eq!(e.omega, w, epsilon = 1e-9);
        }
        // And the general solver agrees.
        let problem = four_symmetric_problem(INV_SQRT8, 0.0, 0.5, p).unwrap();
        let general = solve(&problem).unwrap();
        assert_abs_diff_eq!(general.p_corr, a, epsilon = 1e-10);
    }

    #[test]
    fn four_symmetric_low_regime() {
        let (sol, _) = four_symmetric_solve(INV_SQRT8, 0.0, 0.5, 0.25).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.povm.elements[2].omega, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.povm.elements[3].omega, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn four_symmetric_high_regime() {
        let p = 0.31;
        let (sol, _) = four_symmetric_solve(INV_SQRT8, 0.0, 0.5, p).unwrap();
        let beta12 = (0.25 - INV_SQRT8 * INV_SQRT8).sqrt();
        assert_abs_diff_eq!(sol.p_corr, p * (1.0 + 2.0 * beta12), epsilon = 1e-12);
        assert_eq!(sol.classification, Classification::Projective(0, 1));
    }
}
