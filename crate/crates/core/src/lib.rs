//! Minimum-error discrimination of pure qubit states.
//!
//! Everything here is phrased in Bloch-vector form: a pure state is a point on
//! the sphere of radius 1/2, and a POVM element is a frequency `omega >= 0`
//! scaling a rank-1 projector with direction `gamma` on the same sphere.
//! A POVM resolves the identity iff the frequencies sum to 2 and the weighted
//! directions sum to the zero vector.
//!
//! The direct solver ([`solver::solve`]) finds the measurement maximizing the
//! probability of correctly naming the emitted state and returns it together
//! with a numerical [`certificate::Certificate`] of the Holevo optimality
//! conditions; a passing certificate proves global optimality. The inverse
//! construction ([`inverse::inverse`]) builds states and priors for which a
//! given POVM is optimal. [`oracle::oracle_optimize`] is an independent
//! derivative-free maximizer used as a lower-bound witness, and
//! [`sim::simulate`] is a seeded Monte-Carlo measurement simulator.

pub mod bloch;
pub mod certificate;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod inverse;
pub mod oracle;
pub mod povm;
pub mod problem;
pub mod random;
pub mod sim;
pub mod solver;
pub mod special;

pub use bloch::{
    bloch_from_ket, density_from_bloch, overlap, BlochVector, DensityMatrix, Rotation,
    BLOCH_RADIUS, DEFAULT_TOL,
};
pub use certificate::{certify, Certificate};
pub use cost::{cost_matrix, success_probability, CostMatrix};
pub use error::{Error, Result};
pub use inverse::{inverse, round_trip, InverseResult};
pub use oracle::{oracle_optimize, OracleConfig};
pub use povm::{validate_povm, Povm, PovmElement};
pub use problem::Problem;
pub use sim::{simulate, SimReport};
pub use solver::{solve, solve_two, CandidateSystem, Classification, Solution};
