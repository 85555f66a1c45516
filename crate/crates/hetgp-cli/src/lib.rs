//! Batch experiment harness for the heteroscedastic GP regression models:
//! configuration parsing, grid execution with restartable cells, pairwise
//! comparison summaries, the GPLV sampler-efficiency study, and dataset
//! export.

pub mod config;
pub mod runner;
pub mod study;
pub mod summarize;
