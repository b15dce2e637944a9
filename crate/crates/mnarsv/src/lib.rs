//! File formats, configuration, the parallel study runner, application
//! analysis tools and the command-line interface built on `mnarsv-core`.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod study;

pub use error::CliError;
pub use mnarsv_core as core;
