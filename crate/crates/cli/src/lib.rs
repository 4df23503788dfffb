//! Experiment runner behind the `mppstat` binary: JSON configs in, pattern
//! and result CSVs out.

pub mod config;
pub mod report;
pub mod run;
