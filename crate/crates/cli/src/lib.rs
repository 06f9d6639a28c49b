//! Batch front end for heatlab: scenario files, sweeps and report export.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod run;
pub mod scenario;
pub mod sweep;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::Path;

use heatlab::report::VerificationReport;

pub use error::{CliError, Outcome, Result, USAGE_EXIT};
pub use run::run_scenario;
pub use scenario::{Check, Scenario};
pub use sweep::{run_sweep, SweepCheck, SweepSpec};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn write_to(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p.display().to_string(), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).map_err(|e| CliError::io("stdout", e))
        }
    }
}

/// Runs a scenario file and writes the JSON report.
pub fn run_file(path: &Path, out: Option<&Path>) -> Result<Outcome> {
    let scenario = Scenario::from_json(&read(path)?)?;
    let report = run_scenario(&scenario)?;
    let mut json = report.to_json();
    json.push('\n');
    write_to(out, json.as_bytes())?;
    Ok(Outcome::from_pass(report.all_pass()))
}

pub fn sweep_to(spec: &SweepSpec, out: Option<&Path>) -> Result<Outcome> {
    let rows = run_sweep(spec)?;
    let mut buf = Vec::new();
    table::write_rows(&mut buf, &rows)?;
    write_to(out, &buf)?;
    Ok(Outcome::from_pass(rows.iter().all(|r| r.pass)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Re-emits a saved report as canonical JSON or as CSV rows.
pub fn convert_report(path: &Path, format: Format, out: Option<&Path>) -> Result<()> {
    let report: VerificationReport = serde_json::from_str(&read(path)?)?;
    if !report.is_consistent() {
        return Err(CliError::usage(format!("{}: summary does not match the entries", path.display())));
    }
    match format {
        Format::Json => {
            let mut json = report.to_json();
            json.push('\n');
            write_to(out, json.as_bytes())
        }
        Format::Csv => {
            let mut buf = Vec::new();
            table::write_rows(&mut buf, &table::report_rows(&report))?;
            write_to(out, &buf)
        }
    }
}
