//! File formats, the evaluation harness and the command-line interface
//! around [`pourpitch_core`].
//!
//! Everything here is IO: WAV audio, TOML container descriptions, CSV tables
//! for tracks and ground truth, JSON reports and manifests. Every file is
//! written atomically through a temporary file in the destination directory.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod report;

pub use error::{AppError, AppResult};
