//! Report rows and output formatting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Measurement {
    /// Passes when `|observed − expected| ≤ tolerance`.
    pub fn compare(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Self {
        let residual = (observed - expected).abs();
        Self {
            name: name.into(),
            expected,
            observed,
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// Boolean outcome encoded as 1.0 / 0.0.
    pub fn flag(name: impl Into<String>, expected: bool, observed: bool) -> Self {
        Self::compare(name, f64::from(u8::from(expected)), f64::from(u8::from(observed)), 0.0)
    }

    /// Custom pass rule; the residual is still `|observed − expected|`.
    pub fn judged(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64, pass: bool) -> Self {
        Self {
            pass,
            ..Self::compare(name, expected, observed, tolerance)
        }
    }

    fn prefixed(&self, prefix: &str) -> Self {
        Self {
            name: format!("{prefix}/{}", self.name),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    /// Pretty-printed JSON.
    #[default]
    Structured,
    /// Tab-separated rows: name, expected, observed, residual, pass.
    Tabular,
}

/// A report that flattens into named rows.
pub trait Tabulate {
    /// Rows with names already qualified by their section.
    fn rows(&self) -> Vec<Measurement>;

    fn passed(&self) -> bool;

    /// A numerical failure (no convergence, non-finite values) occurred.
    fn numerical_failure(&self) -> bool {
        false
    }
}

pub(crate) fn qualify(prefix: &str, rows: &[Measurement]) -> Vec<Measurement> {
    rows.iter().map(|m| m.prefixed(prefix)).collect()
}

pub const TABULAR_HEADER: &str = "name\texpected\tobserved\tresidual\tpass";

/// Renders `report`; the tabular form prints 17 significant digits.
pub fn emit<T: Serialize + Tabulate>(report: &T, format: OutputFormat) -> String {
    match format {
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        OutputFormat::Tabular => {
            let mut s = String::from(TABULAR_HEADER);
            s.push('\n');
            for m in report.rows() {
                let _ = writeln!(
                    s,
                    "{}\t{:.16e}\t{:.16e}\t{:.16e}\t{}",
                    m.name, m.expected, m.observed, m.residual, m.pass
                );
            }
            s
        }
    }
}
