//! Scenario runner for the `fwmspin` simulator: TOML scenario files,
//! parallel measurement sweeps, dark-state runs and the brute-force oracles.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod oracle_cmd;
pub mod scenario;
pub mod seed;

pub use config::{load, parse, Config, ConfigError};
pub use scenario::{diagnose, run, Diagnostics, RunError, RunOptions, RunReport};
