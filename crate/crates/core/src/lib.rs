//! Bandits with knapsacks: the UCB-Simplex policy family, the exact small-LP
//! machinery it is built on, ground-truth environments, and the clairvoyant
//! quantities used to measure regret.
//!
//! The crate is `no_std` (it needs `alloc`). Anything that touches files,
//! threads or the command line lives in the companion `bwk` crate.
#![no_std]
// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod env;
pub mod episode;
mod error;
pub mod estimator;
pub mod lp;
mod math;
pub mod oracle;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
