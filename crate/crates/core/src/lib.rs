//! Core engine for fairness-aware fault localization and repair of dense
//! feed-forward classifiers.
//!
//! The pipeline has three stages, each usable on its own:
//!
//! 1. [`bias`] estimates how strongly a trained model's error profile favors
//!    one sensitive group over the other.
//! 2. [`localize`] scores every weight of a target layer by gradient loss and
//!    forward impact per subgroup, then extracts the Pareto front of the
//!    fairness-weighted scores.
//! 3. [`repair`] searches replacement values for the localized weights with a
//!    particle swarm, minimizing a chosen group-fairness metric.
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature instead of `std` for builds without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("fairfix-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod bias;
pub mod dataset;
pub mod error;
pub mod fairness;
pub mod localize;
mod math;
pub mod net;
pub mod pareto;
pub mod repair;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
