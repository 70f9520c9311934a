//! Winding of a planar rod polymer around a point.
//!
//! A chain of `n` rigid rods of length `l0` is pinned at `(L, 0)`; each rod
//! angle performs an independent Brownian motion with rotational diffusion
//! constant `D`. The crate estimates the mean time for the free end to
//! complete one full turn around the origin, by direct simulation
//! ([`montecarlo`]) and through the large-`n` asymptotic formulas built from
//! special-function integrals ([`analytic`]). [`cltlab`] checks the
//! central-limit behaviour of the free end that the asymptotics rely on.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cltlab;
mod error;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
pub use num_complex::Complex64;
