//! Experiment runner for marginal contrastive conditional density estimation:
//! synthetic and CSV benchmarks, ablation grids, and table output.

pub mod ablation;
pub mod commands;
pub mod config;
pub mod density_bench;
pub mod error;
pub mod ingest;
pub mod methods;
pub mod output;
pub mod protocol;
pub mod real_bench;

pub use error::{BenchError, Result};
