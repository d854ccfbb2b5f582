//! Command-line harness: workspace file formats and the pipeline behind each command.

pub mod cli;
pub mod config;
pub mod container;
pub mod error;
pub mod formats;
pub mod pipeline;
