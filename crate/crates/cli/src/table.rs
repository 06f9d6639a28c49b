//! Flat CSV rows shared by sweeps and `report --format csv`.

use std::io::Write;

use heatlab::report::{CheckEntry, VerificationReport};
use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const HEADER: [&str; 11] = ["check", "k", "a", "t", "x", "y", "p", "lhs", "rhs", "gap", "pass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub check: String,
    pub k: String,
    pub a: String,
    pub t: String,
    pub x: String,
    pub y: String,
    pub p: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub pass: bool,
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn param(entry: &CheckEntry, key: &str) -> String {
    match entry.params.get(key) {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(items)) => items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
        Some(v) => v.to_string(),
    }
}

impl Row {
    pub fn from_entry(entry: &CheckEntry) -> Self {
        let check = match entry.params.get("inequality") {
            Some(Value::String(name)) => format!("{}/{name}", entry.check),
            _ => entry.check.clone(),
        };
        Row {
            check,
            k: join(entry.space.iter().map(|l| l.k)),
            a: join(entry.space.iter().map(|l| l.a)),
            t: param(entry, "t"),
            x: param(entry, "x"),
            y: param(entry, "y"),
            p: param(entry, "p"),
            lhs: entry.lhs,
            rhs: entry.rhs,
            gap: entry.gap,
            pass: entry.pass,
        }
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| crate::error::CliError::io("csv output", e))?;
    Ok(())
}

pub fn report_rows(report: &VerificationReport) -> Vec<Row> {
    report.entries.iter().map(Row::from_entry).collect()
}
