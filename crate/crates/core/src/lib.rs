//! Psychometric evaluation of automated graders.
//!
//! Grader predictions are turned into a binary correctness matrix, a 1PL
//! testlet model is fitted by penalized maximum likelihood, and the fitted
//! abilities and difficulties feed recovery and split-half checks,
//! difficulty-stratified accuracy, and feature correlation analysis.

pub mod data;
pub mod difficulty;
pub mod error;
pub mod features;
pub mod irt;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod validation;

pub use data::{build_matrix, parse_records, CorrectnessMatrix, GradingRecord, Label, Prediction};
pub use error::{Error, Result};
pub use irt::{fit, FitConfig, FitResult, IrtParameters};
