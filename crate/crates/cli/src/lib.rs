//! Batch front-end: configuration, the estimate-assemble-analyze pipeline,
//! and CSV/SVG artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod svg;
pub mod table;

pub use config::{AnalysisConfig, EstimatorConfig, Method, NoiseConfig, SystemConfig};
pub use error::{CliError, Result};
