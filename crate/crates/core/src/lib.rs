//! Generalized Rabi model toolkit: truncated bases, Hamiltonians, perturbative
//! multiphoton resonances, exact-diagonalization scans and junction dynamics.
//!
//! All quantities are dimensionless, in units of the atomic transition
//! frequency `omega_a`. The numerical core is generic over [`Real`] (`f32`,
//! `f64`); the aliases below fix `f64`, which every tolerance in the tests
//! assumes. Exact rational arithmetic is available for the resonance
//! coefficients through [`perturbation::frequency_coefficients`].

// `!(x > 0)` guards are deliberate: they reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod perturbation;
pub mod scalar;
pub mod spectrum;
pub mod symmetry;

pub use basis::{annihilation_matrix, bare_state_vector, site_operator, Atom, BareLabel, BasisSpec};
pub use error::{Error, Result};
pub use models::{build_grm, build_grm_rwa, build_hopping_only, build_junction, parity_operator, ParityKind};
pub use perturbation::{Method, ResonanceSpec};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;

pub type Operator = basis::OperatorMatrix<f64>;
pub type Operator32 = basis::OperatorMatrix<f32>;
pub type ModelParams = models::ModelParams<f64>;
pub type ModelParams32 = models::ModelParams<f32>;
pub type JunctionParams = models::JunctionParams<f64>;
pub type JunctionParams32 = models::JunctionParams<f32>;
pub type ResonanceResult = perturbation::ResonanceResult<f64>;
pub type Spectrum = spectrum::SpectrumResult<f64>;
pub type Spectrum32 = spectrum::SpectrumResult<f32>;
pub type CrossingResult = spectrum::CrossingResult<f64>;
pub type ErrorCell = spectrum::ErrorCell<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type Trajectory32 = dynamics::Trajectory<f32>;
pub type Timescales = dynamics::Timescales<f64>;
