//! Numerical laboratory for geometric phases of parametrized integrable
//! Hamiltonian systems.
//!
//! The crate computes the Hannay angle of a family of integrable systems as
//! the holonomy of the torus-averaged (Hannay-Berry) connection over a loop
//! in parameter space, lifts the same systems to unitary Koopman evolution on
//! truncated Fourier states over the invariant torus, computes the
//! Berry/Aharonov-Anandan phase of the lifted eigenstates, and checks the
//! relation `beta_m = m . theta (mod 2pi)` between the two holonomies —
//! together with `S(0) = 0` on constant loops. Every connection-based number
//! has an independent brute-force counterpart (adiabatic slow-drive
//! integration, composition-operator quadrature, Monte Carlo measure checks)
//! so that agreement is meaningful.
//!
//! Modules follow the pipeline:
//!
//! - [`families`]: parametrized integrable families and action-angle charts
//! - [`dynamics`]: classical flows, measure checks, resonance, torus averages
//! - [`koopman`]: the unitary lift on truncated Fourier states
//! - [`projective`]: ray geometry, Fubini-Study distance, discrete holonomy
//! - [`holonomy`]: the Hannay-Berry one-form, Hannay and Berry holonomies,
//!   and the relation report
//! - [`oracles`]: slow-drive adiabatic reference values and convergence fits
//!
//! All numerics are generic over the scalar via [`Real`]; `*64` aliases at
//! the crate root pin the `f64` instantiations used by the command-line
//! front end.

// Guard comparisons are written `!(x > 0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod families;
pub mod holonomy;
pub mod koopman;
pub mod oracles;
pub mod projective;
pub mod real;
pub mod rng;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` parameter point.
pub type ParamPoint64 = families::ParamPoint<f64>;
/// `f64` generalized oscillator family.
pub type Oscillator64 = families::GeneralizedOscillator;
/// `f64` parameter-space loop.
pub type ParamLoop64 = holonomy::ParamLoop<f64>;
/// `f64` truncated Fourier state.
pub type FourierState64 = koopman::FourierState<f64>;
/// `f64` relation report.
pub type HolonomyReport64 = holonomy::HolonomyReport<f64>;
