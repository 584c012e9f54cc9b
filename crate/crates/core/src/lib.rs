//! Geometric-algebra simulation of a local hidden-variable model for
//! polarization-entangled photon pairs.
//!
//! The hidden variable is the handedness `λ = ±1` of the bivector basis.
//! Every trial draws `λ` from a counter-based random stream, evaluates the
//! ±1 outcomes at both stations through the full Cl(3,0) geometric product
//! and feeds the results into the correlation estimators, CHSH bounds,
//! error-propagation checks and the two-station protocol.

pub mod chsh;
pub mod config;
pub mod error;
pub mod error_prop;
pub mod ga;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod stations;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
