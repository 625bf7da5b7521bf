//! Command-line harness around `doa-core`: TOML sweeps, Monte Carlo runs
//! with CSV output, property verification and snapshot files.

pub mod config;
pub mod error;
pub mod snapfile;
pub mod sweep;
pub mod verify;

pub use error::{BenchError, Result};
