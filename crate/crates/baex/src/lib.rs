//! Bayesian autoencoder (BAE) ensembles for multi-sensor condition monitoring,
//! with per-sensor attribution scores and quantitative explanation-quality
//! metrics driven by covariate-shift ground truth.
//!
//! The crate is organised as five layers:
//!
//! - [`nn`] — a minimal feed-forward engine (dense / conv1d / conv1d-transpose)
//!   with exact reverse-mode gradients, Kaiming-uniform init and Adam.
//! - [`bae`] — anchored-ensemble training, negative-log-likelihood prediction
//!   cubes, attribution decomposition, and the centralised / coalitional
//!   model configurations.
//! - [`pipeline`] — cube ingestion, trimming, FFT magnitude features,
//!   chronological splits, min-max scaling, shift-scenario construction and
//!   attribution postprocessing, plus a synthetic drift generator.
//! - [`metrics`] — Spearman drift coefficients, G_SDC, G_SSER, SEQI, MCC and
//!   group-mean Pearson correlation.
//! - [`stats`] — Friedman / Wilcoxon method comparison with average ranks and
//!   a critical-difference style summary.

pub mod bae;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod stats;

mod seed;

pub use seed::seed_for;
