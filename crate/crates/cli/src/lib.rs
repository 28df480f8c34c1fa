//! Experiment specs, suite runner and report output for the `povm` binary.

pub mod commands;
pub mod error;
pub mod report;
pub mod spec;
pub mod suite;

pub use error::CommandError;
pub use report::{emit, Measurement, OutputFormat, Tabulate};
pub use spec::{parse_experiment_spec, Check, ExperimentSpec, SpecError, SpecErrorKind};
pub use suite::{run_suite, run_suite_with, RunOptions, RunReport};

/// Renders a suite report.
pub fn emit_report(report: &RunReport, format: OutputFormat) -> String {
    emit(report, format)
}
