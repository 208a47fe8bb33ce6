//! Interference and coherence patterns of photons and matter waves from
//! Feynman path sums.
//!
//! The crate has three engines that cross-check each other: closed-form
//! patterns ([`analytic`]), a path-enumeration engine that sums amplitudes
//! over detector assignments and averages over sampled source phases
//! ([`paths`]), and stochastic photon-by-photon and event-stream simulators
//! ([`montecarlo`]).

pub mod analytic;
pub mod coherence;
pub mod constants;
pub mod error;
pub mod montecarlo;
pub mod propagators;
pub mod paths;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
