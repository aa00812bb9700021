//! Pseudo-spectral solver suite for a hydrostatic Oldroyd-B thin-layer model.
//!
//! The crate provides:
//! - spectral fields on `T^{d_h} x T_y` with analytic-weighted anisotropic
//!   Sobolev norms ([`field`], [`norms`]),
//! - the algebraic stress closure of the hydrostatic limit and its
//!   independently-solved linear-system oracle ([`constitutive`]),
//! - a semi-implicit solver for the limit system ([`limit`]) and a
//!   splitting solver for the scaled relaxation system ([`eps`]),
//! - a-priori monitors: analyticity-radius tracking, bootstrap and energy
//!   inequalities, Poincare margins ([`diagnostics`]),
//! - experiment harnesses: relaxation-rate studies, self-convergence, and
//!   randomized checks of the weighted product/composition/magnitude
//!   inequalities ([`harness`]),
//! - a config-file driven CLI front end ([`config`], [`execute`]).

// Negated comparisons (`!(x > 0.0)`) are how validation rejects NaN;
// indexed loops mirror the mode-lattice arithmetic they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod eps;
pub mod error;
pub mod execute;
pub mod field;
pub mod grid;
pub mod harness;
pub mod limit;
pub mod norms;
pub mod report;

pub use error::{Error, Result};

/// Crate version, also reported in run manifests and over FFI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
