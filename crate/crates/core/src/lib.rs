//! Tabular classification toolkit: CSV loading and preprocessing, seven
//! classical classifiers, a feedforward network, stratified evaluation, and
//! an end-to-end experiment pipeline with a planted-rule cohort generator.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod classic;
pub mod error;
pub mod eval;
pub mod json;
pub mod linalg;
pub mod matrix;
pub mod neural;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod stats;
pub mod tabular;

pub use error::{Error, ErrorCategory, Result};
pub use matrix::Matrix;
