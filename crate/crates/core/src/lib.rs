//! Improved genetic algorithm (exhaustive-split crossover, half-doubled
//! mutation) with simple-GA, PSO and grey-wolf baselines, a benchmark harness
//! over four classic test functions, and a black-box adversarial attack that
//! drives the GA against any classifier exposing label confidences.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod benchmarks;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod operators;
pub mod optimizers;
pub mod parallel;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
