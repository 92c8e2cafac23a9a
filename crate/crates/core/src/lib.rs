//! Finite-dimensional realizations of q-Gaussian and q-Araki-Woods variables.
//!
//! The crate is organized around the objects that can be computed exactly at
//! desk scale:
//!
//! - [`partitions`]: pair partitions, crossing numbers and the finite-N
//!   crossing statistic that drives the central limit theorem.
//! - [`qmoments`]: closed-form pairing sums for q-Gaussian and q-circular
//!   moments, plus a truncated q-Fock space used as an independent oracle.
//! - [`babyfock`]: the spin algebra with mixed commutation relations on a
//!   subset-indexed basis, with left/right creation and annihilation operators.
//! - [`modular`]: Tomita-Takesaki data (S, J, Delta) of the twisted vacuum state.
//! - [`clt`]: the central-limit matrix model, its moments and spectral truncation.
//! - [`arakiwoods`]: deformed inner products from spectral data and the
//!   dyadic discretization of the generator.

pub mod arakiwoods;
pub mod babyfock;
pub mod clt;
mod error;
pub mod linalg;
pub mod modular;
pub mod partitions;
pub mod qmoments;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Absolute tolerance used by every exact-identity check.
pub const IDENTITY_TOL: f64 = 1e-12;
