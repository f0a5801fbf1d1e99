//! Desk-scale stochastic numerics for compensated-Poisson (finite-activity
//! Levy) noise driving linear evolution equations.
//!
//! The crate simulates time-homogeneous Poisson random measures on a finite
//! mark space, integrates step processes against the compensated measure,
//! convolves integrands against `S(t) = exp(-tA)` for symmetric nonnegative
//! generators, projects functions and paths (Haar, shifted Haar, dyadic),
//! bounds the Skorokhod distance between cadlag step paths, and runs
//! Monte-Carlo experiments that compare the *law* of the resulting
//! path/integrand/noise triple across different noise constructions.
//!
//! Everything is deterministic given a 64-bit seed: per-draw generators are
//! derived from `(seed, draw index)`, so ensembles are reproducible and
//! order-independent under parallelism.

pub mod error;
pub mod io;
pub mod lawlab;
pub mod prm;
pub mod projections;
pub mod rng;
pub mod semigroup;
pub mod skorokhod;
pub mod stats;
pub mod stochint;

pub use error::{Error, Result};
