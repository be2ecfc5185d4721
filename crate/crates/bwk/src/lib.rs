//! Files, threads and the command line on top of `bwk-core`: TOML experiment
//! configs, parallel seeded sweeps, CSV and JSON-lines output, and the `bwk`
//! binary.

pub mod cli;
pub mod config;
pub mod sweep;
pub mod trace;
pub mod verify;

mod error;

pub use error::{Error, Result};
