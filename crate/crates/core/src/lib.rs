//! Vehicle-bridge interaction engine.
//!
//! The bridge is an Euler-Bernoulli beam discretised with 2D frame elements
//! ([`beam`]); vehicles are small mass-spring-dashpot systems driven at their
//! contact points ([`vehicle`]); road profiles follow the ISO 8608 spectral
//! model ([`roughness`]). [`coupling`] runs either the per-step iterative
//! partitioned analysis or the one-pass moving-load analysis, and
//! [`analysis`] holds metrics, benchmark set-ups and parametric sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beam;
pub mod coupling;
pub mod error;
pub mod format;
pub mod roughness;
pub mod vehicle;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
