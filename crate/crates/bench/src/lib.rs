//! Experiment harness: configured suites of problems and methods, run
//! directories with traces and verification reports, and plot data.

pub mod artifacts;
pub mod config;
pub mod plot;
pub mod problem;
pub mod suite;
pub mod verify;

pub use config::{BenchConfig, ConfigError};
pub use suite::{run_suite, SuiteOutcome};
