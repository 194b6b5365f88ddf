//! On-disk formats.

pub mod atomic;
pub mod container;
pub mod tables;
pub mod wav;

pub use atomic::{write_atomic, write_json, write_with};
