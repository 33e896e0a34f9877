//! Files, configuration and command-line plumbing around `ccbond-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use ccbond_core as core;
pub use error::{AppError, AppResult};
