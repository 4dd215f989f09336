//! Uncertainty quantification for classifier accuracy measurements.
//!
//! The crate is split by concern:
//!
//! - [`stats`]: normal distribution functions, normal-approximation and
//!   fold-sample confidence intervals, sample statistics, interval overlap
//!   and McNemar's paired test.
//! - [`data`]: prediction ingestion, accuracy aggregation, stratified k-fold
//!   assignment and paired contingency tables.
//! - [`distribution`]: histograms and Gaussian QQ diagnostics.
//! - [`simulate`]: Monte Carlo coverage and multi-seed studies on synthetic
//!   binomial classifiers.
//! - [`report`]: the command-line surface, comparison reports and SVG charts.

pub mod data;
pub mod distribution;
pub mod error;
pub mod format;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
