//! Direct optimization: given a problem, find the minimum-error POVM.
//!
//! The search walks a cascade of candidate supports. For a support of four
//! states the free parameters `(A, B)` follow from a linear system plus one
//! scalar equation; for three states they are found by damped Newton
//! iteration; for two states the projective solution is in closed form.
//! A candidate is accepted only when its frequencies are nonnegative, every
//! silent state passes the extension test `Gamma - p_j rho_j >= 0`, and the
//! full certificate passes, so whatever is returned is provably optimal.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{BlochVector, BLOCH_RADIUS, DEFAULT_TOL};
use crate::certificate::{certify, min_eig_hermitian, Certificate};
use crate::cost::{cost_matrix, success_probability};
use crate::error::{Error, Result};
use crate::geometry::origin_hull_weights;
use crate::povm::{Povm, PovmElement};
use crate::problem::Problem;

/// Acceptance threshold for residuals of the candidate equations.
const CANDIDATE_RESIDUAL_TOL: f64 = 1e-10;

/// Frequencies in `[-OMEGA_CLAMP, 0)` are treated as zero.
const OMEGA_CLAMP: f64 = 1e-12;

/// A root of the candidate equations for one support: the success probability
/// `A = tr Gamma` and the free vector `B` that generate the detector
/// directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSystem {
    pub a: f64,
    pub b: Vector3<f64>,
    /// Indices of the states meant to click (`omega > 0`).
    pub subset: Vec<usize>,
}

/// How the optimal measurement is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Projective (von Neumann) measurement on a pair of states.
    Projective(usize, usize),
    /// Generalized measurement with three clicking elements.
    Generalized3([usize; 3]),
    /// Generalized measurement with four clicking elements.
    Generalized4([usize; 4]),
    /// The states themselves form the POVM (`gamma_j = beta_j`).
    PovmOfStates,
}

/// A certified optimum. The POVM always has one element per input state,
/// with zero frequency for states that never click.
#[derive(Debug, Clone)]
pub struct Solution {
    pub povm: Povm,
    pub p_corr: f64,
    pub classification: Classification,
    pub certificate: Certificate,
    /// Set when the instance contained coincident states and was solved
    /// through the merged reduction.
    pub degenerate: bool,
}

/// Detector directions generated by a candidate `(A, B)`:
/// `gamma_j = (p_j beta_j - B) / (A - p_j)`.
///
/// No length normalization is imposed; the vectors have length 1/2 exactly
/// when `(A, B)` solves the candidate equations.
pub fn gamma_from_ab(
    problem: &Problem,
    subset: &[usize],
    a: f64,
    b: Vector3<f64>,
) -> Result<Vec<BlochVector>> {
    let mut out = Vec::with_capacity(subset.len());
    for &j in subset {
        let p = problem.prior(j);
        let denom = a - p;
        if denom.abs() <= 1e-12 * a.abs().max(1.0) {
            return Err(Error::DegenerateDenominator { index: j });
        }
        let g = (problem.state(j).vector() * p - b) / denom;
        out.push(BlochVector::from_vector(g));
    }
    Ok(out)
}

/// Left-hand minus right-hand side of the length equation for one state:
/// `A^2/4 - A p_j / 2 - |B|^2 + 2 p_j B . beta_j`.
fn length_equation_residual(a: f64, b: &Vector3<f64>, p: f64, beta: &Vector3<f64>) -> f64 {
    0.25 * a * a - 0.5 * a * p - b.norm_squared() + 2.0 * p * b.dot(beta)
}

// ---------------------------------------------------------------------------
// Two states: closed form.
// ---------------------------------------------------------------------------

/// Orthonormal frame adapted to a pair of states: `e1 ~ beta1 + beta2`,
/// `e2 ~ beta1 - beta2` (so the pair is mirror-symmetric in the second
/// coordinate), `e3 = e1 x e2`.
fn pair_frame(beta1: &BlochVector, beta2: &BlochVector) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let sum = beta1.add(beta2).vector();
    let diff = beta1.sub(beta2).vector();
    let e2 = diff.normalize();
    let e1 = if sum.norm() > 1e-9 {
        (sum - e2 * sum.dot(&e2)).normalize()
    } else {
        // Antipodal pair: any unit vector orthogonal to e2.
        let probe = if e2.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        (probe - e2 * probe.dot(&e2)).normalize()
    };
    let e3 = e1.cross(&e2);
    (e1, e2, e3)
}

/// Optimal projective measurement for two pure states with priors
/// `p1 + p2 <= 1` (the Helstrom solution, valid for subproblems as well).
pub fn solve_two(
    beta1: &BlochVector,
    beta2: &BlochVector,
    p1: f64,
    p2: f64,
) -> Result<Solution> {
    if !(p1 > 0.0 && p2 > 0.0) || p1 + p2 > 1.0 + 1e-9 {
        return Err(Error::InvalidPriors(format!(
            "p1 = {p1}, p2 = {p2}: want positive with p1 + p2 <= 1"
        )));
    }
    beta1.validate_pure(DEFAULT_TOL)?;
    beta2.validate_pure(DEFAULT_TOL)?;

    if beta1.distance(beta2) < DEFAULT_TOL {
        return solve_two_identical(beta1, p1, p2);
    }

    let (e1, e2, _e3) = pair_frame(beta1, beta2);
    let b11 = beta1.vector().dot(&e1);
    let b12 = beta1.vector().dot(&e2);
    debug_assert!(b12 > 0.0);

    let d = (b11 * b11 * (p1 - p2) * (p1 - p2) + b12 * b12 * (p1 + p2) * (p1 + p2)).sqrt();
    let a = 0.5 * (p1 + p2) + d;

    // In-frame detector direction for the first outcome; the second is its
    // antipode.
    let gx = b11 * (p1 - p2) / (2.0 * d);
    let gy = b12 * (p1 + p2) / (2.0 * d);
    let g1 = e1 * gx + e2 * gy;
    let gamma1 = BlochVector::from_vector(g1);
    let gamma2 = BlochVector::from_vector(-g1);

    let povm = Povm::new(vec![
        PovmElement::new(1.0, gamma1),
        PovmElement::new(1.0, gamma2),
    ]);
    let problem = Problem::new(vec![*beta1, *beta2], vec![p1, p2])?;
    let certificate = certify(&problem, &povm)?;
    let p_corr = success_probability(&problem, &povm)?;
    debug_assert!((p_corr - a).abs() < 1e-12);
    Ok(Solution {
        povm,
        p_corr,
        classification: Classification::Projective(0, 1),
        certificate,
        degenerate: false,
    })
}

/// Two coincident states: the best strategy names the likelier label.
fn solve_two_identical(beta: &BlochVector, p1: f64, p2: f64) -> Result<Solution> {
    let (first, second) = if p1 >= p2 { (0usize, 1usize) } else { (1, 0) };
    let mut elements = vec![PovmElement::new(0.0, *beta); 2];
    elements[first] = PovmElement::new(1.0, *beta);
    elements[second] = PovmElement::new(1.0, beta.neg());
    let povm = Povm::new(elements);
    let problem = Problem::new(vec![*beta, *beta], vec![p1, p2])?;
    let certificate = certify(&problem, &povm)?;
    let p_corr = success_probability(&problem, &povm)?;
    Ok(Solution {
        povm,
        p_corr,
        classification: Classification::Projective(first, second),
        certificate,
        degenerate: true,
    })
}

// ---------------------------------------------------------------------------
// Extension test.
// ---------------------------------------------------------------------------

/// For each extra state, whether `Gamma - p_j rho_j >= 0`, i.e. whether the
/// base measurement stays optimal when the extra state is added with zero
/// detection frequency.
///
/// `base_problem` is the instance the base solution was computed on.
pub fn extension_check(
    base: &Solution,
    base_problem: &Problem,
    problem: &Problem,
    extra_indices: &[usize],
) -> Result<Vec<bool>> {
    let gamma_tilde = cost_matrix(base_problem, &base.povm)?.symmetrized();
    let tol = problem.tolerance();

    let two_state_base = base_problem.len() == 2 && !base.degenerate;

    let mut out = Vec::with_capacity(extra_indices.len());
    for &j in extra_indices {
        let p = problem.prior(j);
        let rho = problem.density(j)?.entries();
        let g = gamma_tilde - rho.map(|c| c * Complex64::new(p, 0.0));
        let ok = min_eig_hermitian(&g) >= -tol;
        if two_state_base {
            // Closed-form cross-check of the trace and determinant.
            let (tr_cf, det_cf) = pair_extension_closed_form(
                base_problem.state(0),
                base_problem.state(1),
                base_problem.prior(0),
                base_problem.prior(1),
                problem.state(j),
                p,
            );
            let tr = (g[(0, 0)] + g[(1, 1)]).re;
            let det = (g[(0, 0)].re * g[(1, 1)].re) - g[(0, 1)].norm_sqr();
            debug_assert!(
                (tr - tr_cf).abs() < 1e-9 && (det - det_cf).abs() < 1e-9,
                "closed form disagrees: tr {tr} vs {tr_cf}, det {det} vs {det_cf}"
            );
        }
        out.push(ok);
    }
    Ok(out)
}

/// Closed forms for `tr G_j` and `det G_j` when the base measurement is the
/// optimal projective pair for `(beta1, p1)`, `(beta2, p2)`:
/// `tr G_j = A - p_j` and the covariant determinant expression.
pub fn pair_extension_closed_form(
    beta1: &BlochVector,
    beta2: &BlochVector,
    p1: f64,
    p2: f64,
    beta_j: &BlochVector,
    p_j: f64,
) -> (f64, f64) {
    let dot12 = beta1.dot(beta2);
    let d = (0.25 * (p1 * p1 + p2 * p2) - 2.0 * p1 * p2 * dot12).sqrt();
    let a = 0.5 * (p1 + p2) + d;
    let tr = a - p_j;

    let weighted = beta1.scale(p1).sub(&beta2.scale(p2));
    let pulls = beta1
        .sub(beta_j)
        .scale(p1)
        .add(&beta2.sub(beta_j).scale(p2));
    let det = 0.5 * d * (a - p_j) - a * (p1 - p2) * (p1 - p2) / (8.0 * d)
        + 0.5 * p_j * (p1 - p2) / d * weighted.dot(beta_j)
        + p_j * pulls.dot(beta_j);
    (tr, det)
}

/// Equiprobable specialization of the pair-extension determinant:
/// `det G_j = p^2 (beta1 + beta2) . (beta_j - beta1)`.
pub fn pair_extension_det_equiprobable(
    beta1: &BlochVector,
    beta2: &BlochVector,
    p: f64,
    beta_j: &BlochVector,
) -> f64 {
    p * p * beta1.add(beta2).dot(&beta_j.sub(beta1))
}

// ---------------------------------------------------------------------------
// Four-state candidates: linear system plus one scalar equation.
// ---------------------------------------------------------------------------

/// Candidate `(A, B)` for a support of four states.
///
/// The three difference equations fix `B = A v`; substituting into the
/// summed quadratic equation leaves `A = 0` and one nonzero root, which must
/// exceed every prior in the support and satisfy the original length
/// equations.
pub fn solve_candidate_m4(problem: &Problem, subset: &[usize]) -> Result<CandidateSystem> {
    assert_eq!(subset.len(), 4, "m4 candidate needs a support of four");
    let p: Vec<f64> = subset.iter().map(|&j| problem.prior(j)).collect();
    let beta: Vec<Vector3<f64>> = subset.iter().map(|&j| problem.state(j).vector()).collect();

    let mut rows = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for j in 1..4 {
        let r = (beta[0] * p[0] - beta[j] * p[j]) * 4.0;
        rows.set_row(j - 1, &r.transpose());
        rhs[j - 1] = p[0] - p[j];
    }
    let scale = rows.amax().max(1e-300);
    if rows.determinant().abs() <= 1e-12 * scale.powi(3) {
        return Err(Error::SingularSystem);
    }
    let v = rows.lu().solve(&rhs).ok_or(Error::SingularSystem)?;

    // Summed equation with B = A v, nonzero root.
    let alpha: f64 = p.iter().sum();
    let coupling: f64 = (0..4).map(|j| p[j] * v.dot(&beta[j])).sum();
    let denom = 4.0 - 16.0 * v.norm_squared();
    let numer = 2.0 * alpha - 8.0 * coupling;
    if denom.abs() < 1e-14 {
        return Err(Error::NoAdmissibleRoot);
    }
    let a = numer / denom;
    let max_p = p.iter().cloned().fold(f64::MIN, f64::max);
    if a.is_nan() || a <= max_p {
        return Err(Error::NoAdmissibleRoot);
    }
    let b = v * a;
    for j in 0..4 {
        if length_equation_residual(a, &b, p[j], &beta[j]).abs() > CANDIDATE_RESIDUAL_TOL {
            return Err(Error::NoAdmissibleRoot);
        }
    }
    Ok(CandidateSystem {
        a,
        b,
        subset: subset.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Three-state candidates: damped Newton on four equations.
// ---------------------------------------------------------------------------

fn m3_residual(x: &Vector4<f64>, p: &[f64; 3], beta: &[Vector3<f64>; 3]) -> Option<Vector4<f64>> {
    let a = x[0];
    let b = Vector3::new(x[1], x[2], x[3]);
    let mut f = Vector4::zeros();
    let mut gammas = [Vector3::zeros(); 3];
    for j in 0..3 {
        f[j] = length_equation_residual(a, &b, p[j], &beta[j]);
        let denom = a - p[j];
        if denom.abs() < 1e-10 {
            return None;
        }
        gammas[j] = (beta[j] * p[j] - b) / denom;
    }
    // Compatibility of the zero-resultant system: the three detector
    // directions must be linearly dependent.
    f[3] = Matrix3::from_columns(&gammas).determinant();
    Some(f)
}

fn m3_newton(
    start: Vector4<f64>,
    p: &[f64; 3],
    beta: &[Vector3<f64>; 3],
) -> Option<Vector4<f64>> {
    let mut x = start;
    let mut f = m3_residual(&x, p, beta)?;
    for _ in 0..120 {
        if f.amax() <= 1e-13 {
            return Some(x);
        }
        // Jacobian by central differences.
        let mut jac = Matrix4::zeros();
        for c in 0..4 {
            let h = 1e-7 * (1.0 + x[c].abs());
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let fp = m3_residual(&xp, p, beta)?;
            let fm = m3_residual(&xm, p, beta)?;
            jac.set_column(c, &((fp - fm) / (2.0 * h)));
        }
        let step = jac.lu().solve(&(-f))?;
        // Backtracking damping on the squared residual norm.
        let mut lambda = 1.0;
        let base = f.norm_squared();
        let mut accepted = false;
        for _ in 0..25 {
            let trial = x + step * lambda;
            if let Some(ft) = m3_residual(&trial, p, beta) {
                if ft.norm_squared() < base * (1.0 - 1e-4 * lambda) || ft.amax() <= 1e-13 {
                    x = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if f.amax() <= CANDIDATE_RESIDUAL_TOL {
        Some(x)
    } else {
        None
    }
}

/// Candidate `(A, B)` for a support of three states, by damped Newton from a
/// fixed set of deterministic starts seeded at the symmetric-case closed
/// form (plane offset times plane normal).
pub fn solve_candidate_m3(problem: &Problem, subset: &[usize]) -> Result<CandidateSystem> {
    assert_eq!(subset.len(), 3, "m3 candidate needs a support of three");
    let p = [
        problem.prior(subset[0]),
        problem.prior(subset[1]),
        problem.prior(subset[2]),
    ];
    let beta = [
        problem.state(subset[0]).vector(),
        problem.state(subset[1]).vector(),
        problem.state(subset[2]).vector(),
    ];
    let max_p = p.iter().cloned().fold(f64::MIN, f64::max);
    let alpha: f64 = p.iter().sum();

    // Plane through the three Bloch points.
    let normal = (beta[1] - beta[0]).cross(&(beta[2] - beta[0]));
    if normal.norm() < 1e-12 {
        return Err(Error::DegenerateInput(
            "three collinear Bloch points".into(),
        ));
    }
    let mut n = normal.normalize();
    let mut offset = beta[0].dot(&n);
    if offset < 0.0 {
        n = -n;
        offset = -offset;
    }
    let a0 = (alpha / 3.0) * (1.0 + (1.0 - 4.0 * offset * offset).max(0.0).sqrt());
    let a0 = a0.max(max_p * 1.02 + 1e-3);
    let b0 = n * (offset * alpha / 3.0);

    // Two in-plane directions for deterministic perturbations.
    let t1 = (beta[1] - beta[0]).normalize();
    let t2 = n.cross(&t1);
    let starts: [(f64, Vector3<f64>); 8] = [
        (1.0, Vector3::zeros()),
        (1.1, Vector3::zeros()),
        (0.95, Vector3::zeros()),
        (1.0, t1 * 0.05),
        (1.0, -t1 * 0.05),
        (1.0, t2 * 0.05),
        (1.0, -t2 * 0.05),
        (1.25, t1 * 0.1 + t2 * 0.1),
    ];

    let mut converged = false;
    for (fa, db) in starts {
        let start = Vector4::new(
            a0 * fa,
            b0.x + db.x,
            b0.y + db.y,
            b0.z + db.z,
        );
        if let Some(x) = m3_newton(start, &p, &beta) {
            converged = true;
            let a = x[0];
            if a > max_p {
                return Ok(CandidateSystem {
                    a,
                    b: Vector3::new(x[1], x[2], x[3]),
                    subset: subset.to_vec(),
                });
            }
        }
    }
    if converged {
        Err(Error::NoAdmissibleRoot)
    } else {
        Err(Error::NoConvergence)
    }
}

// ---------------------------------------------------------------------------
// Frequencies.
// ---------------------------------------------------------------------------

/// Frequencies of a candidate support from the zero-resultant and total-mass
/// constraints (`sum omega gamma = 0`, `sum omega = 2`).
///
/// Exact solve for a support of four; least squares with a residual gate for
/// smaller supports. Fails with [`Error::NegativeFrequency`] when the support
/// must shrink.
pub fn frequencies_from_candidate(
    problem: &Problem,
    candidate: &CandidateSystem,
) -> Result<Vec<f64>> {
    let gammas = gamma_from_ab(problem, &candidate.subset, candidate.a, candidate.b)?;
    for (g, &j) in gammas.iter().zip(&candidate.subset) {
        if (g.norm() - BLOCH_RADIUS).abs() > 1e-8 {
            return Err(Error::NonProjectorElement {
                index: j,
                length: g.norm(),
            });
        }
    }
    let m = candidate.subset.len();
    let omega = if m == 4 {
        let mat = Matrix4::from_fn(|r, c| if r < 3 { gammas[c].vector()[r] } else { 1.0 });
        let scale = mat.amax().max(1e-300);
        if mat.determinant().abs() <= 1e-12 * scale.powi(4) {
            return Err(Error::SingularSystem);
        }
        let sol = mat
            .lu()
            .solve(&Vector4::new(0.0, 0.0, 0.0, 2.0))
            .ok_or(Error::SingularSystem)?;
        sol.iter().cloned().collect::<Vec<f64>>()
    } else {
        let mut mat = DMatrix::<f64>::zeros(4, m);
        for (c, g) in gammas.iter().enumerate() {
            for r in 0..3 {
                mat[(r, c)] = g.vector()[r];
            }
            mat[(3, c)] = 1.0;
        }
        let rhs = DVector::from_vec(vec![0.0, 0.0, 0.0, 2.0]);
        let svd = mat.clone().svd(true, true);
        let sol = svd.solve(&rhs, 1e-13).map_err(|_| Error::SingularSystem)?;
        if (&mat * &sol - &rhs).amax() > CANDIDATE_RESIDUAL_TOL {
            return Err(Error::SingularSystem);
        }
        sol.iter().cloned().collect::<Vec<f64>>()
    };

    let mut out = Vec::with_capacity(m);
    for (k, &w) in omega.iter().enumerate() {
        if w < -OMEGA_CLAMP {
            return Err(Error::NegativeFrequency {
                index: candidate.subset[k],
                omega: w,
            });
        }
        out.push(if w < 0.0 { 0.0 } else { w });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The cascade.
// ---------------------------------------------------------------------------

/// Pads a support measurement to one element per problem state. Silent
/// states carry their own Bloch vector as direction, with zero frequency.
fn padded_povm(
    problem: &Problem,
    subset: &[usize],
    gammas: &[BlochVector],
    omegas: &[f64],
) -> Povm {
    let mut elements: Vec<PovmElement> = problem
        .states()
        .iter()
        .map(|b| PovmElement::new(0.0, *b))
        .collect();
    for ((&j, g), &w) in subset.iter().zip(gammas).zip(omegas) {
        elements[j] = PovmElement::new(w, *g);
    }
    Povm::new(elements)
}

fn classify_active(povm: &Povm) -> Classification {
    let active = povm.active_indices();
    match active.len() {
        2 => Classification::Projective(active[0], active[1]),
        3 => Classification::Generalized3([active[0], active[1], active[2]]),
        _ => Classification::Generalized4([active[0], active[1], active[2], active[3]]),
    }
}

/// Subsets of `{0..n}` of size `k`, ordered by descending prior mass then
/// lexicographically. Determinism of the cascade comes from this order.
fn ordered_subsets(problem: &Problem, k: usize) -> Vec<Vec<usize>> {
    let n = problem.len();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for j in start..n {
            current.push(j);
            rec(j + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut subsets);
    subsets.sort_by(|a, b| {
        let pa: f64 = a.iter().map(|&j| problem.prior(j)).sum();
        let pb: f64 = b.iter().map(|&j| problem.prior(j)).sum();
        pb.partial_cmp(&pa).unwrap().then_with(|| a.cmp(b))
    });
    subsets
}

/// Tries one candidate support: pads the POVM, checks the silent states and
/// the certificate. Returns `None` when the candidate is not optimal.
fn try_accept(
    problem: &Problem,
    subset: &[usize],
    gammas: &[BlochVector],
    omegas: &[f64],
) -> Result<Option<Solution>> {
    let povm = padded_povm(problem, subset, gammas, omegas);
    if povm.validate(problem.tolerance()).is_err() {
        return Ok(None);
    }
    let subproblem = problem.subproblem(subset)?;
    let sub_povm = Povm::new(
        subset
            .iter()
            .map(|&j| povm.elements[j])
            .collect::<Vec<_>>(),
    );
    let sub_cert = certify(&subproblem, &sub_povm)?;
    if !sub_cert.passed {
        return Ok(None);
    }
    let base = Solution {
        povm: sub_povm,
        p_corr: success_probability(&subproblem, &povm_subset(&povm, subset))?,
        classification: classify_active(&povm),
        certificate: sub_cert,
        degenerate: false,
    };
    let extras: Vec<usize> = (0..problem.len()).filter(|j| !subset.contains(j)).collect();
    let ext = extension_check(&base, &subproblem, problem, &extras)?;
    if !ext.iter().all(|&ok| ok) {
        return Ok(None);
    }
    let certificate = certify(problem, &povm)?;
    if !certificate.passed {
        return Ok(None);
    }
    let p_corr = success_probability(problem, &povm)?;
    Ok(Some(Solution {
        classification: classify_active(&povm),
        povm,
        p_corr,
        certificate,
        degenerate: false,
    }))
}

fn povm_subset(povm: &Povm, subset: &[usize]) -> Povm {
    Povm::new(subset.iter().map(|&j| povm.elements[j]).collect())
}

/// Solves the direct problem: a certified minimum-error measurement.
pub fn solve(problem: &Problem) -> Result<Solution> {
    let groups = duplicate_groups(problem);
    if groups.iter().all(|g| g.len() == 1) {
        return solve_distinct(problem);
    }
    solve_with_duplicates(problem, &groups)
}

fn solve_distinct(problem: &Problem) -> Result<Solution> {
    let n = problem.len();
    let priors = problem.priors();
    let equal_priors = priors
        .iter()
        .all(|&p| (p - priors[0]).abs() <= 1e-12 * priors[0].max(1.0));

    // States-form-POVM shortcut: with equal priors the states themselves can
    // be the detectors whenever the origin sits in their convex hull.
    if n >= 4 && equal_priors {
        let points: Vec<Vector3<f64>> = problem.states().iter().map(|b| b.vector()).collect();
        if let Some(weights) = origin_hull_weights(&points) {
            let elements: Vec<PovmElement> = problem
                .states()
                .iter()
                .zip(&weights)
                .map(|(b, &w)| PovmElement::new(2.0 * w, *b))
                .collect();
            let povm = Povm::new(elements);
            if povm.validate(problem.tolerance()).is_ok() {
                let certificate = certify(problem, &povm)?;
                if certificate.passed {
                    let p_corr = success_probability(problem, &povm)?;
                    return Ok(Solution {
                        povm,
                        p_corr,
                        classification: Classification::PovmOfStates,
                        certificate,
                        degenerate: false,
                    });
                }
            }
        }
    }

    let mut diagnostics: Vec<String> = Vec::new();

    if n >= 4 {
        for subset in ordered_subsets(problem, 4) {
            match solve_candidate_m4(problem, &subset)
                .and_then(|c| Ok((frequencies_from_candidate(problem, &c)?, c)))
            {
                Ok((omegas, candidate)) => {
                    let gammas =
                        gamma_from_ab(problem, &subset, candidate.a, candidate.b)?;
                    if let Some(solution) = try_accept(problem, &subset, &gammas, &omegas)? {
                        return Ok(solution);
                    }
                }
                Err(e) => diagnostics.push(format!("m4 {subset:?}: {e}")),
            }
        }
    }

    if n >= 3 {
        for subset in ordered_subsets(problem, 3) {
            match solve_candidate_m3(problem, &subset)
                .and_then(|c| Ok((frequencies_from_candidate(problem, &c)?, c)))
            {
                Ok((omegas, candidate)) => {
                    let gammas =
                        gamma_from_ab(problem, &subset, candidate.a, candidate.b)?;
                    if let Some(solution) = try_accept(problem, &subset, &gammas, &omegas)? {
                        return Ok(solution);
                    }
                }
                Err(e) => diagnostics.push(format!("m3 {subset:?}: {e}")),
            }
        }
    }

    for subset in ordered_subsets(problem, 2) {
        let (i, j) = (subset[0], subset[1]);
        match solve_two(
            problem.state(i),
            problem.state(j),
            problem.prior(i),
            problem.prior(j),
        ) {
            Ok(pair) => {
                let gammas = [pair.povm.elements[0].gamma, pair.povm.elements[1].gamma];
                let omegas = [pair.povm.elements[0].omega, pair.povm.elements[1].omega];
                if let Some(solution) = try_accept(problem, &subset, &gammas, &omegas)? {
                    return Ok(solution);
                }
            }
            Err(e) => diagnostics.push(format!("m2 {subset:?}: {e}")),
        }
    }

    // Last resort: certify the oracle's best POVM.
    let config = crate::oracle::OracleConfig::default();
    let (povm, p_corr) = crate::oracle::oracle_optimize(problem, &config);
    let certificate = certify(problem, &povm)?;
    if certificate.passed {
        return Ok(Solution {
            classification: classify_active(&povm),
            povm,
            p_corr,
            certificate,
            degenerate: false,
        });
    }
    Err(Error::SolverFailure(format!(
        "no certified candidate; attempts: {}",
        diagnostics.join("; ")
    )))
}

// ---------------------------------------------------------------------------
// Coincident states.
// ---------------------------------------------------------------------------

fn duplicate_groups(problem: &Problem) -> Vec<Vec<usize>> {
    let tol = problem.tolerance().max(DEFAULT_TOL);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for j in 0..problem.len() {
        if let Some(group) = groups
            .iter_mut()
            .find(|g| problem.state(g[0]).distance(problem.state(j)) < tol)
        {
            group.push(j);
        } else {
            groups.push(vec![j]);
        }
    }
    groups
}

/// Reduction for coincident states: each group is represented once with its
/// largest prior (smaller labels in the group can never do better), solved,
/// and the representative's element is handed back to that label while the
/// rest of the group stays silent.
fn solve_with_duplicates(problem: &Problem, groups: &[Vec<usize>]) -> Result<Solution> {
    let reps: Vec<usize> = groups
        .iter()
        .map(|g| {
            *g.iter()
                .max_by(|&&a, &&b| {
                    problem
                        .prior(a)
                        .partial_cmp(&problem.prior(b))
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .unwrap()
        })
        .collect();

    if reps.len() == 1 {
        // All states coincide: name the likeliest label.
        let best = reps[0];
        let beta = *problem.state(best);
        let mut elements: Vec<PovmElement> = problem
            .states()
            .iter()
            .map(|b| PovmElement::new(0.0, *b))
            .collect();
        elements[best] = PovmElement::new(1.0, beta);
        let other = (0..problem.len()).find(|&j| j != best).expect("n >= 2");
        elements[other] = PovmElement::new(1.0, beta.neg());
        let povm = Povm::new(elements);
        let certificate = certify(problem, &povm)?;
        let p_corr = success_probability(problem, &povm)?;
        return Ok(Solution {
            povm,
            p_corr,
            classification: Classification::Projective(best, other),
            certificate,
            degenerate: true,
        });
    }

    let merged = Problem::with_tolerance(
        reps.iter().map(|&j| *problem.state(j)).collect(),
        reps.iter().map(|&j| problem.prior(j)).collect(),
        problem.tolerance(),
    )?;
    let merged_solution = solve_distinct(&merged)?;

    let mut elements: Vec<PovmElement> = problem
        .states()
        .iter()
        .map(|b| PovmElement::new(0.0, *b))
        .collect();
    for (g, element) in reps.iter().zip(&merged_solution.povm.elements) {
        elements[*g] = *element;
    }
    let povm = Povm::new(elements);
    let certificate = certify(problem, &povm)?;
    if !certificate.passed {
        return Err(Error::SolverFailure(
            "certificate failed after duplicate-state reduction".into(),
        ));
    }
    let p_corr = success_probability(problem, &povm)?;
    Ok(Solution {
        classification: classify_active(&povm),
        povm,
        p_corr,
        certificate,
        degenerate: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::overlap;
    use crate::povm::trine_states;
    use approx::assert_abs_diff_eq;

    fn helstrom_value(p1: f64, p2: f64, s_sq: f64) -> f64 {
        0.5 * (p1 + p2) + 0.5 * ((p1 + p2) * (p1 + p2) - 4.0 * p1 * p2 * s_sq).sqrt()
    }

    #[test]
    fn two_state_perpendicular_bloch_vectors() {
        let b1 = BlochVector::new(0.5, 0.0, 0.0);
        let b2 = BlochVector::new(0.0, 0.5, 0.0);
        let sol = solve_two(&b1, &b2, 0.5, 0.5).unwrap();
        let expect = 0.5 + 0.5 / std::f64::consts::SQRT_2;
        assert_abs_diff_eq!(sol.p_corr, expect, epsilon = 1e-12);
        assert!(sol.certificate.passed);
        assert_abs_diff_eq!(
            sol.p_corr,
            helstrom_value(0.5, 0.5, overlap(&b1, &b2)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_state_antipodal_is_perfect() {
        let b1 = BlochVector::new(0.0, 0.0, 0.5);
        let sol = solve_two(&b1, &b1.neg(), 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_state_subproblem_antipodal() {
        let b1 = BlochVector::new(0.0, 0.0, 0.5);
        let sol = solve_two(&b1, &b1.neg(), 0.3, 0.2).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 0.5, epsilon = 1e-12);
        assert!(sol.certificate.passed);
    }

    #[test]
    fn two_state_identical_returns_max_prior() {
        let b = BlochVector::new(0.5, 0.0, 0.0);
        let sol = solve_two(&b, &b, 0.3, 0.7).unwrap();
        assert!(sol.degenerate);
        assert_abs_diff_eq!(sol.p_corr, 0.7, epsilon = 1e-12);
        assert!(sol.certificate.passed);
    }

    #[test]
    fn two_state_invalid_priors() {
        let b1 = BlochVector::new(0.0, 0.0, 0.5);
        assert!(matches!(
            solve_two(&b1, &b1.neg(), 0.8, 0.4),
            Err(Error::InvalidPriors(_))
        ));
    }

    #[test]
    fn gamma_from_ab_collinear_when_b_zero() {
        let problem =
            Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap();
        let gammas =
            gamma_from_ab(&problem, &[0, 1, 2], 2.0 / 3.0, Vector3::zeros()).unwrap();
        for (g, b) in gammas.iter().zip(problem.states()) {
            let cross = g.cross(b);
            assert_abs_diff_eq!(cross.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_from_ab_degenerate_denominator() {
        let problem =
            Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap();
        assert!(matches!(
            gamma_from_ab(&problem, &[0, 1, 2], 1.0 / 3.0, Vector3::zeros()),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn trine_solves_generalized() {
        let problem =
            Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap();
        let sol = solve(&problem).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 2.0 / 3.0, epsilon = 1e-10);
        assert!(matches!(sol.classification, Classification::Generalized3(_)));
        for e in &sol.povm.elements {
            assert_abs_diff_eq!(e.omega, 2.0 / 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn trine_candidate_m3_closed_form() {
        let problem =
            Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap();
        let c = solve_candidate_m3(&problem, &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(c.a, 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(c.b.norm(), 0.0, epsilon = 1e-9);
        let omegas = frequencies_from_candidate(&problem, &c).unwrap();
        for w in omegas {
            assert_abs_diff_eq!(w, 2.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lifted_trine_candidate() {
        // Trine lifted to a common z = 0.3: A = 0.6, B = (0, 0, 0.1).
        let r = (0.25f64 - 0.09).sqrt();
        let states: Vec<BlochVector> = (0..3)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 3.0;
                BlochVector::new(r * a.cos(), r * a.sin(), 0.3)
            })
            .collect();
        let problem = Problem::new(states, vec![1.0 / 3.0; 3]).unwrap();
        let c = solve_candidate_m3(&problem, &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(c.a, 0.6, epsilon = 1e-9);
        assert_abs_diff_eq!(c.b.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.b.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.b.z, 0.1, epsilon = 1e-9);
        let sol = solve(&problem).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 0.6, epsilon = 1e-10);
    }

    #[test]
    fn tetrahedron_states_form_povm() {
        let s = 0.5 / 3.0f64.sqrt();
        let states = vec![
            BlochVector::new(s, s, s),
            BlochVector::new(s, -s, -s),
            BlochVector::new(-s, s, -s),
            BlochVector::new(-s, -s, s),
        ];
        let problem = Problem::new(states, vec![0.25; 4]).unwrap();
        let sol = solve(&problem).unwrap();
        assert_abs_diff_eq!(sol.p_corr, 0.5, epsilon = 1e-12);
        assert_eq!(sol.classification, Classification::PovmOfStates);
    }

    #[test]
    fn trine_pair_extension_fails_for_third() {
        let states = trine_states();
        let problem = Problem::new(states.to_vec(), vec![1.0 / 3.0; 3]).unwrap();
        let pair = solve_two(&states[0], &states[1], 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let sub = problem.subproblem(&[0, 1]).unwrap();
        let ext = extension_check(&pair, &sub, &problem, &[2]).unwrap();
        assert!(!ext[0]);
        // Equiprobable closed form agrees in sign.
        let det =
            pair_extension_det_equiprobable(&states[0], &states[1], 1.0 / 3.0, &states[2]);
        assert!(det < 0.0);
    }

    #[test]
    fn duplicate_states_are_handled() {
        let up = BlochVector::new(0.0, 0.0, 0.5);
        let side = BlochVector::new(0.5, 0.0, 0.0);
        let problem =
            Problem::new(vec![up, up, side], vec![0.25, 0.35, 0.4]).unwrap();
        let sol = solve(&problem).unwrap();
        assert!(sol.degenerate);
        assert!(sol.certificate.passed);
        // The first (smaller-prior) duplicate never clicks.
        assert_eq!(sol.povm.elements[0].omega, 0.0);
        // Value matches the merged two-state instance.
        let merged = solve_two(&up, &side, 0.35, 0.4).unwrap();
        assert_abs_diff_eq!(sol.p_corr, merged.p_corr, epsilon = 1e-12);
    }

    #[test]
    fn all_identical_states() {
        let up = BlochVector::new(0.0, 0.0, 0.5);
        let problem = Problem::new(vec![up, up, up], vec![0.2, 0.5, 0.3]).unwrap();
        let sol = solve(&problem).unwrap();
        assert!(sol.degenerate);
        assert_abs_diff_eq!(sol.p_corr, 0.5, epsilon = 1e-12);
        assert!(sol.certificate.passed);
    }

    #[test]
    fn scale_invariance_of_pair_solution() {
        let b1 = BlochVector::new(0.5, 0.0, 0.0);
        let b2 = BlochVector::new(0.3, 0.4, 0.0);
        let full = solve_two(&b1, &b2, 0.6, 0.4).unwrap();
        for alpha in [0.9, 0.5, 0.13] {
            let scaled = solve_two(&b1, &b2, 0.6 * alpha, 0.4 * alpha).unwrap();
            assert_abs_diff_eq!(scaled.p_corr, alpha * full.p_corr, epsilon = 1e-12);
            for (a, b) in scaled.povm.elements.iter().zip(&full.povm.elements) {
                assert_abs_diff_eq!(a.omega, b.omega, epsilon = 1e-12);
                assert_abs_diff_eq!(a.gamma.distance(&b.gamma), 0.0, epsilon = 1e-12);
            }
        }
    }
}
