//! Deterministic training-and-benchmarking toolkit for per-round data subset
//! selection.
//!
//! The training loop draws a fresh subset of the dataset for every round
//! (repeated sampling of random subsets), with static-subset and
//! importance-based selection as baselines, learning-rate schedules adapted
//! to the reduced step budget, and closed-form evaluators for the matching
//! convergence and generalization bounds.
//!
//! Modules:
//! - [`rng`], [`matrix`], [`dataset`]: seeded randomness and data primitives
//! - [`sampling`]: per-round subset schedules and the early-stopping stream
//! - [`optim`]: SGD / accelerated updates and learning-rate schedules
//! - [`models`]: small differentiable models with exact gradients
//! - [`harness`]: the round-loop driver with timing and accuracy tracking
//! - [`theory`]: bound evaluators and the nearest-neighbor boundary proxy

pub mod dataset;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod models;
pub mod optim;
pub mod rng;
pub mod sampling;
pub mod theory;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use matrix::{matmul, Matrix};
pub use rng::{shuffle, uniform_indices, Rng, Stream};
