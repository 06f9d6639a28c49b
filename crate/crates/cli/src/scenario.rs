//! Scenario files: what to check, where and with which tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use heatlab::transport::Exponent;
use heatlab::{TestFunction, WeightedLine, WeightedSpace};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Contraction,
    Gradient,
    EntropyGeodesic,
    FunctionalInequalities,
    DualityChain,
    KnProbe,
    Splitting,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Contraction,
        Check::Gradient,
        Check::EntropyGeodesic,
        Check::FunctionalInequalities,
        Check::DualityChain,
        Check::KnProbe,
        Check::Splitting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Contraction => "contraction",
            Check::Gradient => "gradient",
            Check::EntropyGeodesic => "entropy-geodesic",
            Check::FunctionalInequalities => "functional-inequalities",
            Check::DualityChain => "duality-chain",
            Check::KnProbe => "kn-probe",
            Check::Splitting => "splitting",
        }
    }

    /// Default tolerance when the scenario does not override it.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Check::Contraction
            | Check::Gradient
            | Check::EntropyGeodesic
            | Check::FunctionalInequalities
            | Check::KnProbe => 1e-4,
            Check::DualityChain | Check::Splitting => 1e-3,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Check::ALL.iter().map(|c| c.name()).collect();
                format!("unknown check `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis for kernel measures.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Largest spacing of the grids test functions are sampled on.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_nodes() -> usize {
    2049
}

fn default_spacing() -> f64 {
    0.01
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes: default_nodes(),
            spacing: default_spacing(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnSettings {
    #[serde(default = "default_n")]
    pub n: f64,
    #[serde(default = "default_a_max")]
    pub a_max: f64,
}

fn default_n() -> f64 {
    10.0
}

fn default_a_max() -> f64 {
    20.0
}

impl Default for KnSettings {
    fn default() -> Self {
        Self {
            n: default_n(),
            a_max: default_a_max(),
        }
    }
}

fn default_function() -> TestFunction {
    TestFunction::Identity
}

fn default_positive_function() -> TestFunction {
    TestFunction::Trig {
        offset: 2.0,
        slope: 0.0,
        terms: vec![[0.5, 1.0, 0.0], [0.25, 2.0, 1.0]],
    }
}

fn default_d() -> f64 {
    4.0
}

/// Scenario as read from disk. `checks` and `tolerances` keys stay strings so
/// that errors can name the offending entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub space: Vec<WeightedLine>,
    #[serde(default)]
    pub grid: GridSpec,
    pub points: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<Exponent>,
    pub checks: Vec<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Function for the gradient and duality-chain checks.
    #[serde(default = "default_function")]
    pub function: TestFunction,
    /// Positive function for the log-Sobolev gap.
    #[serde(default = "default_positive_function")]
    pub positive_function: TestFunction,
    /// Exponent scale of the weighted integral.
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub kn: KnSettings,
}

fn default_exponents() -> Vec<Exponent> {
    vec![Exponent::Finite(2.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub space: WeightedSpace,
    pub grid: GridSpec,
    pub points: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub exponents: Vec<Exponent>,
    pub checks: Vec<Check>,
    pub tolerances: BTreeMap<Check, f64>,
    pub function: TestFunction,
    pub positive_function: TestFunction,
    pub d: f64,
    pub kn: KnSettings,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ScenarioFile = serde_json::from_str(text)?;
        raw.validate()
    }

    pub fn tolerance(&self, check: Check) -> f64 {
        self.tolerances.get(&check).copied().unwrap_or_else(|| check.default_tolerance())
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl ScenarioFile {
    pub fn validate(self) -> Result<Scenario> {
        let space = WeightedSpace::new(self.space).map_err(|e| CliError::usage(format!("space: {e}")))?;
        let checks = self
            .checks
            .iter()
            .enumerate()
            .map(|(i, c)| c.parse::<Check>().map_err(|e| CliError::usage(format!("checks[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if checks.is_empty() {
            return Err(CliError::usage("checks: at least one check is required"));
        }
        let mut tolerances = BTreeMap::new();
        for (key, &tol) in &self.tolerances {
            let check = key
                .parse::<Check>()
                .map_err(|e| CliError::usage(format!("tolerances.{key}: {e}")))?;
            if !(tol > 0.0) {
                return Err(CliError::usage(format!("tolerances.{key}: must be positive")));
            }
            tolerances.insert(check, tol);
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != space.dim() {
                return Err(CliError::usage(format!(
                    "points[{i}]: expected {} coordinates, got {}",
                    space.dim(),
                    p.len()
                )));
            }
        }
        if self.points.is_empty() {
            return Err(CliError::usage("points: at least one point is required"));
        }
        if self.times.is_empty() || self.times.iter().any(|&t| !(t > 0.0)) {
            return Err(CliError::usage("times: need at least one positive time"));
        }
        if self.exponents.is_empty() {
            return Err(CliError::usage("exponents: need at least one exponent"));
        }
        if self.grid.nodes < 3 || !(self.grid.spacing > 0.0) {
            return Err(CliError::usage("grid: need nodes >= 3 and positive spacing"));
        }
        Ok(Scenario {
            space,
            grid: self.grid,
            points: self.points,
            times: self.times,
            exponents: self.exponents,
            checks,
            tolerances,
            function: self.function,
            positive_function: self.positive_function,
            d: self.d,
            kn: self.kn,
        })
    }
}
