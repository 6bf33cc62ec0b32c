//! Numerical certificate of the minimum-error optimality conditions.
//!
//! A measurement is optimal iff the Lagrange operator is Hermitian and every
//! `G_j = Gamma - p_j rho_j` is positive semidefinite; for clicking elements
//! `G_j pi_hat_j = 0` must hold as well. The conditions are sufficient, so a
//! passing certificate is a proof of global optimality, not a heuristic.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cost::cost_matrix;
use crate::error::Result;
use crate::povm::Povm;
use crate::problem::Problem;

/// Evidence collected by [`certify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    /// Max-entry norm of `Gamma - Gamma^dagger`.
    pub hermiticity_residual: f64,
    /// Smallest eigenvalue of each `G_j = Gamma_tilde - p_j rho_j`.
    pub min_eig_g: Vec<f64>,
    /// Max-entry norm of `G_j pi_hat_j` per element (zero when omega_j = 0).
    pub complementarity: Vec<f64>,
    pub passed: bool,
    pub tolerance: f64,
}

/// Eigenvalues `(min, max)` of a Hermitian 2x2 matrix by the closed quadratic
/// formula; only the real diagonal and the (0,1) entry are read.
pub fn eig_range_hermitian(m: &Matrix2<Complex64>) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + m[(0, 1)].norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

pub fn min_eig_hermitian(m: &Matrix2<Complex64>) -> f64 {
    eig_range_hermitian(m).0
}

/// Alternative PSD test: `tr H >= -2 tol` and `det H >= -tol * |H|` with the
/// max-entry norm. Cross-checked against the eigenvalue route in tests.
pub fn psd_by_trace_det(m: &Matrix2<Complex64>, tol: f64) -> bool {
    let trace = m[(0, 0)].re + m[(1, 1)].re;
    let det = m[(0, 0)].re * m[(1, 1)].re - m[(0, 1)].norm_sqr();
    let norm = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    trace >= -2.0 * tol && det >= -tol * norm.max(1e-300)
}

fn max_entry_norm(m: &Matrix2<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Evaluates the optimality conditions for `povm` on `problem`.
///
/// Full positive semidefiniteness is checked for every element, active or
/// not: for clicking elements `det G_j = 0` makes the trace test enough, but
/// silent elements need the complete check.
pub fn certify(problem: &Problem, povm: &Povm) -> Result<Certificate> {
    povm.validate(problem.tolerance())?;
    let gamma = cost_matrix(problem, povm)?;
    let hermiticity_residual = gamma.hermiticity_residual();
    let gamma_tilde = gamma.symmetrized();

    let tol = problem.tolerance();
    let mut min_eig_g = Vec::with_capacity(problem.len());
    let mut complementarity = Vec::with_capacity(problem.len());
    for (j, element) in povm.elements.iter().enumerate() {
        let rho = problem.density(j)?.entries();
        let g = gamma_tilde - rho.map(|c| c * Complex64::new(problem.prior(j), 0.0));
        min_eig_g.push(min_eig_hermitian(&g));
        if element.omega > 0.0 {
            let pi_hat = element.projector().map(|c| c * element.omega);
            complementarity.push(max_entry_norm(&(g * pi_hat)));
        } else {
            complementarity.push(0.0);
        }
    }

    let passed = hermiticity_residual <= tol
        && min_eig_g.iter().all(|&e| e >= -tol)
        && complementarity.iter().all(|&c| c <= tol);
    Ok(Certificate {
        hermiticity_residual,
        min_eig_g,
        complementarity,
        passed,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::{trine_povm, trine_states};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn trine_problem() -> Problem {
        Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap()
    }

    #[test]
    fn trine_povm_certifies_on_trine_problem() {
        let cert = certify(&trine_problem(), &trine_povm()).unwrap();
        assert!(cert.passed, "certificate: {cert:?}");
        assert!(cert.hermiticity_residual < 1e-14);
        for e in &cert.min_eig_g {
            assert!(*e > -1e-14);
        }
    }

    #[test]
    fn mislabeled_trine_fails_complementarity() {
        let mut povm = trine_povm();
        povm.elements.swap(0, 1);
        let cert = certify(&trine_problem(), &povm).unwrap();
        assert!(!cert.passed);
        assert!(cert.complementarity.iter().any(|&c| c > 1e-3));
    }

    #[test]
    fn eig_closed_form_matches_trace_det_route() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let tol = 1e-9;
        for _ in 0..10_000 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let d: f64 = rng.gen_range(-1.0..1.0);
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let m = Matrix2::new(
                Complex64::new(a, 0.0),
                c,
                c.conj(),
                Complex64::new(d, 0.0),
            );
            let by_eig = min_eig_hermitian(&m) >= -tol;
            let by_trace_det = psd_by_trace_det(&m, tol);
            // The two routes may disagree only inside a thin boundary band.
            let (lo, _) = eig_range_hermitian(&m);
            if lo.abs() > 10.0 * tol {
                assert_eq!(by_eig, by_trace_det, "matrix {m:?} min eig {lo}");
            }
        }
    }

    #[test]
    fn eigenvalues_sum_and_multiply_to_trace_and_det() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let d: f64 = rng.gen_range(-2.0..2.0);
            let c = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let m = Matrix2::new(
                Complex64::new(a, 0.0),
                c,
                c.conj(),
                Complex64::new(d, 0.0),
            );
            let (lo, hi) = eig_range_hermitian(&m);
            assert_abs_diff_eq!(lo + hi, a + d, epsilon = 1e-12);
            assert_abs_diff_eq!(lo * hi, a * d - c.norm_sqr(), epsilon = 1e-12);
        }
    }

    #[test]
    fn certificate_is_rotation_covariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let problem = trine_problem();
        let povm = trine_povm();
        for _ in 0..25 {
            let r = crate::bloch::Rotation::random(&mut rng);
            let cert = certify(&problem.rotate(&r), &povm.rotate(&r)).unwrap();
            assert!(cert.passed);
        }
    }
}
