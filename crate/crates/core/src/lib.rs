//! Pseudo-spectral simulation of the generalized surface quasi-geostrophic
//! family on the periodic torus, together with the contraction-mapping
//! construction of local solutions and a Littlewood-Paley diagnostic layer.
//!
//! Module map:
//! - [`spectral`]: fields, FFTs, Fourier multipliers and velocity laws.
//! - [`littlewood_paley`]: dyadic blocks and Besov, Sobolev and Lebesgue norms.
//! - [`transport`]: RK4 solver for linear transport with a prescribed velocity.
//! - [`picard`]: the fixed-point map, its iteration and the horizon search.
//! - [`inequality`]: empirical checks of the functional inequalities.

// Negated float comparisons are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inequality;
pub mod littlewood_paley;
pub mod picard;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
