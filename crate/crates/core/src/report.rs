//! Check records and the report they are collected into.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::space::WeightedLine;

/// One comparison `lhs` vs `rhs`, with `gap = lhs - rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl Link {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            gap: lhs - rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub check: String,
    pub space: Vec<WeightedLine>,
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<Link>,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl CheckEntry {
    pub fn new(check: impl Into<String>, space: &[WeightedLine]) -> Self {
        Self {
            check: check.into(),
            space: space.to_vec(),
            params: BTreeMap::new(),
            links: Vec::new(),
            lhs: 0.0,
            rhs: 0.0,
            gap: 0.0,
            tol: 0.0,
            pass: false,
            detail: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn values(mut self, lhs: f64, rhs: f64, gap: f64, tol: f64, pass: bool) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self.gap = gap;
        self.tol = tol;
        self.pass = pass;
        self
    }

    pub fn links(mut self, links: Vec<Link>) -> Self {
        self.links = links;
        self
    }

    pub fn detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
    pub summary: Summary,
    pub metadata: BTreeMap<String, Value>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.summary.total += 1;
        if entry.pass {
            self.summary.passed += 1;
        } else {
            self.summary.failed += 1;
        }
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for e in other.entries {
            self.push(e);
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    /// Whether the summary agrees with the entries.
    pub fn is_consistent(&self) -> bool {
        let passed = self.entries.iter().filter(|e| e.pass).count();
        self.summary.total == self.entries.len()
            && self.summary.passed == passed
            && self.summary.failed == self.entries.len() - passed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
