//! Noise-robust classifier-head training on frozen feature vectors.
//!
//! The crate is organised the way an experiment flows:
//!
//! - [`nn`]: deterministic dense heads (linear and a `d -> 256 -> K` MLP with
//!   batch-norm, ReLU and dropout), class-weighted cross-entropy, Adam, cosine
//!   annealing and early stopping on validation balanced accuracy.
//! - [`dataset`]: the `FVF1` feature file, CSV ingestion, stratified splits,
//!   class weights and a seeded synthetic feature generator.
//! - [`noise`]: symmetric / asymmetric label-noise injection with per-sample
//!   ground truth.
//! - [`methods`]: CE, linear probe, label smoothing, Co-Teaching, ELR,
//!   the prediction-agreement cascade and `dividemix-lite`.
//! - [`diagnostics`]: loss-overlap, two-sample KS, selection quality and
//!   feature geometry.
//! - [`stats`]: balanced accuracy, per-class recall, paired t-test, Cohen's d.
//! - [`harness`]: experiment configs, sweeps, run records and reports.
//!
//! Internal math is `f64`; features are stored as `f32` at file boundaries.

pub mod dataset;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod methods;
pub mod nn;
pub mod noise;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
