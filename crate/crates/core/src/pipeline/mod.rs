//! End-to-end orchestration: configuration, the synthetic cohort, the
//! experiment runner, model files, single-patient prediction and figures.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod generator;
pub mod models;
pub mod persist;
pub mod predict;
