//! Non-linear archetypal analysis toolkit.
//!
//! Decomposes each observation of a data matrix into a convex combination of
//! `k` learned archetypes. Two model families are provided: principal convex
//! hull analysis (linear and kernelized) and a simplex-constrained
//! autoencoder, plus geometry-based generation from the latent simplex,
//! synthetic ground-truth generators, and an evaluation suite
//! (matched-archetype MSE, MMD, elbow analysis, reproducibility).

pub mod aanet;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod generation;
pub mod linear_aa;
pub mod matrix;
pub mod model;
pub mod numerics;
pub mod persist;
pub mod rng;
pub mod viz;

pub use error::{Error, Result};
pub use matrix::DataMatrix;
pub use model::ArchetypalModel;
pub use rng::SeedRng;
