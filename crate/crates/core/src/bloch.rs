//! Bloch-vector and density-matrix representations of pure qubit states.
//!
//! The convention throughout is that pure states live on a sphere of radius
//! 1/2: a state is `rho = (1/2) I + beta_1 sigma_1 + beta_2 sigma_2 +
//! beta_3 sigma_3` with `|beta| = 1/2`.

use nalgebra::{Matrix2, Rotation3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius of the Bloch sphere for pure states in this crate's convention.
pub const BLOCH_RADIUS: f64 = 0.5;

/// Default tolerance for constraint checks and certificate residuals.
///
/// Closed-form arithmetic in double precision leaves residuals well below
/// 1e-12, so 1e-9 leaves ample margin.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Real 3-vector on the Bloch ball, representing either a state direction
/// `beta` or a projector direction `gamma`.
///
/// The type itself does not enforce length 1/2; constructors and consumers
/// that require a pure state call [`BlochVector::validate_pure`]. Candidate
/// detector directions produced mid-solve are allowed off the sphere and are
/// validated where the algebra requires it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::from_vector(self.vector().cross(&other.vector()))
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    /// Checks that the vector lies on the sphere of radius 1/2 within `tol`.
    pub fn validate_pure(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - BLOCH_RADIUS).abs() <= tol {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "|beta| = {n}, want 1/2 within {tol}"
            )))
        }
    }
}

/// Hermitian 2x2 matrix in the Pauli basis, `c0 sigma_0 + sum_k c_k sigma_k`.
///
/// For a pure state `c0 = 1/2` and `c1^2 + c2^2 + c3^2 = 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DensityMatrix {
    pub fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Self {
        Self { c0, c1, c2, c3 }
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.c0
    }

    pub fn determinant(&self) -> f64 {
        self.c0 * self.c0 - (self.c1 * self.c1 + self.c2 * self.c2 + self.c3 * self.c3)
    }

    /// Complex 2x2 entry view.
    pub fn entries(&self) -> Matrix2<Complex64> {
        let re = |v: f64| Complex64::new(v, 0.0);
        Matrix2::new(
            re(self.c0 + self.c3),
            Complex64::new(self.c1, -self.c2),
            Complex64::new(self.c1, self.c2),
            re(self.c0 - self.c3),
        )
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(self.c1, self.c2, self.c3)
    }
}

/// Bloch vector of the pure state `a|0> + b|1>`.
pub fn bloch_from_ket(a: Complex64, b: Complex64) -> Result<BlochVector> {
    let norm_sq = a.norm_sqr() + b.norm_sqr();
    if (norm_sq - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "ket is not normalized: |a|^2 + |b|^2 = {norm_sq}"
        )));
    }
    let ab = a.conj() * b;
    Ok(BlochVector::new(
        ab.re,
        ab.im,
        0.5 * (a.norm_sqr() - b.norm_sqr()),
    ))
}

/// Density matrix of the pure state with Bloch vector `beta`.
///
/// Rejects sub-sphere vectors: only pure states are in scope.
pub fn density_from_bloch(beta: &BlochVector) -> Result<DensityMatrix> {
    beta.validate_pure(DEFAULT_TOL)?;
    Ok(DensityMatrix::new(0.5, beta.x, beta.y, beta.z))
}

/// Squared overlap `|<psi_1|psi_2>|^2 = 1/2 + 2 beta_1 . beta_2` of two pure
/// states.
pub fn overlap(beta1: &BlochVector, beta2: &BlochVector) -> f64 {
    0.5 + 2.0 * beta1.dot(beta2)
}

/// Proper rotation of the Bloch ball.
#[derive(Debug, Clone)]
pub struct Rotation(Rotation3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Rotation3::identity())
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        Self(Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            angle,
        ))
    }

    /// Uniformly random rotation (random axis, uniform angle).
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let axis = crate::random::unit_vector(rng);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        Self::from_axis_angle(axis, angle)
    }

    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        BlochVector::from_vector(self.0 * v.vector())
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn ket_basis_states() {
        let b = bloch_from_ket(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 0.5));

        let plus = bloch_from_ket(Complex64::new(INV_SQRT2, 0.0), Complex64::new(INV_SQRT2, 0.0))
            .unwrap();
        assert_abs_diff_eq!(plus.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(plus.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(plus.z, 0.0, epsilon = 1e-15);

        let plus_i =
            bloch_from_ket(Complex64::new(INV_SQRT2, 0.0), Complex64::new(0.0, INV_SQRT2)).unwrap();
        assert_abs_diff_eq!(plus_i.y, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ket_rejects_unnormalized() {
        let r = bloch_from_ket(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0));
        assert!(matches!(r, Err(Error::InvalidState(_))));
    }

    #[test]
    fn ket_round_trips_through_density() {
        let a = Complex64::new(0.6, 0.0);
        let b = Complex64::new(0.48, 0.64);
        let beta = bloch_from_ket(a, b).unwrap();
        let rho = density_from_bloch(&beta).unwrap().entries();
        // |psi><psi| directly
        assert_abs_diff_eq!(rho[(0, 0)].re, a.norm_sqr(), epsilon = 1e-14);
        assert_abs_diff_eq!(rho[(1, 1)].re, b.norm_sqr(), epsilon = 1e-14);
        let off = a * b.conj();
        assert_abs_diff_eq!(rho[(0, 1)].re, off.re, epsilon = 1e-14);
        assert_abs_diff_eq!(rho[(0, 1)].im, off.im, epsilon = 1e-14);
    }

    #[test]
    fn density_matrix_examples() {
        let m = density_from_bloch(&BlochVector::new(0.0, 0.0, 0.5))
            .unwrap()
            .entries();
        assert_abs_diff_eq!(m[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.0, epsilon = 1e-15);

        let m = density_from_bloch(&BlochVector::new(0.5, 0.0, 0.0))
            .unwrap()
            .entries();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_abs_diff_eq!(m[(i, j)].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(m[(i, j)].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn density_rejects_mixed() {
        let r = density_from_bloch(&BlochVector::new(0.0, 0.0, 0.3));
        assert!(matches!(r, Err(Error::InvalidState(_))));
    }

    #[test]
    fn density_is_rank_one_and_trace_one() {
        let beta = BlochVector::new(0.3, -0.2, (0.25f64 - 0.09 - 0.04).sqrt());
        let rho = density_from_bloch(&beta).unwrap();
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.determinant(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let up = BlochVector::new(0.0, 0.0, 0.5);
        let down = BlochVector::new(0.0, 0.0, -0.5);
        let side = BlochVector::new(0.5, 0.0, 0.0);
        assert_abs_diff_eq!(overlap(&up, &down), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(overlap(&up, &up), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(overlap(&up, &side), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rotation_preserves_length_and_dot() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let r = Rotation::random(&mut rng);
            let a = crate::random::random_state(&mut rng);
            let b = crate::random::random_state(&mut rng);
            let (ra, rb) = (r.apply(&a), r.apply(&b));
            assert_abs_diff_eq!(ra.norm(), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(ra.dot(&rb), a.dot(&b), epsilon = 1e-12);
        }
    }
}
