//! The Lagrange operator (cost matrix) and the success probability.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::povm::Povm;
use crate::problem::Problem;

/// The Lagrange operator `Gamma = sum_j p_j omega_j pi_j rho_j`.
///
/// Stored as a full complex 2x2 matrix: away from the optimum `Gamma` is not
/// Hermitian, and the certificate measures exactly that defect.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Matrix2<Complex64>);

impl CostMatrix {
    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    /// `(Gamma + Gamma^dagger) / 2`; equals `Gamma` at the optimum.
    pub fn symmetrized(&self) -> Matrix2<Complex64> {
        (self.0 + self.0.adjoint()).map(|c| c * Complex64::new(0.5, 0.0))
    }

    /// Max-entry norm of `Gamma - Gamma^dagger`.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.0 - self.0.adjoint();
        d.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Builds `Gamma` for a problem/POVM pair of equal length (zero-frequency
/// padding is the caller's way of marking states that never click).
pub fn cost_matrix(problem: &Problem, povm: &Povm) -> Result<CostMatrix> {
    if problem.len() != povm.len() {
        return Err(Error::ShapeError(format!(
            "{} states but {} POVM elements",
            problem.len(),
            povm.len()
        )));
    }
    let mut gamma = Matrix2::<Complex64>::zeros();
    for (j, element) in povm.elements.iter().enumerate() {
        if element.omega == 0.0 {
            continue;
        }
        let rho = problem.density(j)?.entries();
        let weight = Complex64::new(problem.prior(j) * element.omega, 0.0);
        gamma += (element.projector() * rho).map(|c| c * weight);
    }
    Ok(CostMatrix(gamma))
}

/// `P_corr = tr Gamma = sum_j p_j omega_j (1/2 + 2 beta_j . gamma_j)`.
pub fn success_probability(problem: &Problem, povm: &Povm) -> Result<f64> {
    Ok(cost_matrix(problem, povm)?.trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::BlochVector;
    use crate::povm::{trine_povm, trine_states, PovmElement};
    use approx::assert_abs_diff_eq;

    fn trine_problem() -> Problem {
        Problem::new(trine_states().to_vec(), vec![1.0 / 3.0; 3]).unwrap()
    }

    #[test]
    fn trine_cost_matrix_is_identity_third() {
        // With sum beta_j = 0 the trine density matrices sum to (3/2) I, and
        // Gamma = (1/3)(2/3) sum rho_j^2 = (1/3) I.
        let g = cost_matrix(&trine_problem(), &trine_povm()).unwrap();
        let m = g.matrix();
        assert_abs_diff_eq!(m[(0, 0)].re, 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[(1, 1)].re, 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[(0, 1)].norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[(1, 0)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn trine_success_probability() {
        let p = success_probability(&trine_problem(), &trine_povm()).unwrap();
        assert_abs_diff_eq!(p, 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn single_active_element_reduces_to_one_term() {
        let problem = trine_problem();
        let mut povm = trine_povm();
        povm.elements[1].omega = 0.0;
        povm.elements[2].omega = 0.0;
        povm.elements[0].omega = 1.5;
        // Not a valid POVM any more, but cost_matrix does not care.
        let g = cost_matrix(&problem, &povm).unwrap();
        let rho = problem.density(0).unwrap().entries();
        let expect =
            (povm.elements[0].projector() * rho).map(|c| c * Complex64::new(0.5, 0.0));
        for (a, b) in g.matrix().iter().zip(expect.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn perfect_discrimination_of_antipodal_states() {
        let up = BlochVector::new(0.0, 0.0, 0.5);
        let problem = Problem::new(vec![up, up.neg()], vec![0.5, 0.5]).unwrap();
        let povm = Povm::new(vec![
            PovmElement::new(1.0, up),
            PovmElement::new(1.0, up.neg()),
        ]);
        assert_abs_diff_eq!(
            success_probability(&problem, &povm).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn identical_states_give_half() {
        let up = BlochVector::new(0.0, 0.0, 0.5);
        let problem = Problem::new(vec![up, up], vec![0.5, 0.5]).unwrap();
        let povm = Povm::new(vec![
            PovmElement::new(1.0, up),
            PovmElement::new(1.0, up.neg()),
        ]);
        assert_abs_diff_eq!(
            success_probability(&problem, &povm).unwrap(),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let problem = trine_problem();
        let povm = Povm::new(vec![PovmElement::new(
            2.0,
            BlochVector::new(0.0, 0.0, 0.5),
        )]);
        assert!(matches!(
            cost_matrix(&problem, &povm),
            Err(Error::ShapeError(_))
        ));
    }
}
