//! Scenario files, CSV logs, reports, plots, sweeps and the `ibvs` command
//! line around the `ibvs-core` simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod error;
pub mod log_csv;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod scenario_file;
pub mod sweep;

pub use error::SimError;
