//! HiGHS backend, case files, reports and the command-line front end for
//! `sccuc-core`.

pub mod cli;
pub mod config;
pub mod fixtures;
pub mod highs;
pub mod io;
pub mod report;

pub use config::{Mode, RunConfig};
pub use highs::{HighsOptions, HighsSolver};
