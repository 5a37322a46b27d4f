//! Relay selection and power allocation for a relay-assisted cellular
//! downlink with decode-and-forward relays.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod selection;
pub mod solver;

pub use error::{Error, Result};
