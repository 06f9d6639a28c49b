//! Cartesian sweeps over `(k, a, t, x, y, p)`, one CSV row per tuple.

use std::str::FromStr;

use heatlab::functionals::{gaussian_lower_bound_gap, log_harnack_gap, log_sobolev_gap, InequalityGap};
use heatlab::rigidity::{contraction_record_with, geodesic_entropy_profile, gradient_estimate_record};
use heatlab::transport::Exponent;
use heatlab::{TestFunction, WeightedLine, WeightedSpace};

use crate::error::{CliError, Result};
use crate::run::padded_axis;
use crate::table::Row;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepCheck {
    Contraction,
    Gradient,
    LogSobolev,
    LogHarnack,
    GaussianLowerBound,
    EntropyGeodesic,
}

impl SweepCheck {
    pub const ALL: [SweepCheck; 6] = [
        SweepCheck::Contraction,
        SweepCheck::Gradient,
        SweepCheck::LogSobolev,
        SweepCheck::LogHarnack,
        SweepCheck::GaussianLowerBound,
        SweepCheck::EntropyGeodesic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepCheck::Contraction => "contraction",
            SweepCheck::Gradient => "gradient",
            SweepCheck::LogSobolev => "log-sobolev",
            SweepCheck::LogHarnack => "log-harnack",
            SweepCheck::GaussianLowerBound => "gaussian-lower-bound",
            SweepCheck::EntropyGeodesic => "entropy-geodesic",
        }
    }
}

impl FromStr for SweepCheck {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        SweepCheck::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepCheck::ALL.iter().map(|c| c.name()).collect();
            CliError::usage(format!("unknown sweep check `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// A list `0.1,0.5,1` or an inclusive linear range `lo:hi:n`.
pub fn parse_range(name: &str, text: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| CliError::usage(format!("--{name}: {why} in `{text}`"));
    let text = text.trim();
    if text.is_empty() {
        return Err(bad("empty range"));
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad("expected lo:hi:n"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad("bad lower bound"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad("bad upper bound"))?;
        let n: usize = n.trim().parse().map_err(|_| bad("bad count"))?;
        return match n {
            0 => Err(bad("empty range")),
            1 => Ok(vec![lo]),
            _ => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number"))))
        .collect()
}

pub fn parse_exponents(text: &str) -> Result<Vec<Exponent>> {
    if text.trim().is_empty() {
        return Err(CliError::usage("--p: empty range"));
    }
    text.split(',')
        .map(|s| s.trim().parse::<Exponent>().map_err(|e| CliError::usage(format!("--p: {e}"))))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub check: SweepCheck,
    pub k: Vec<f64>,
    pub a: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<Exponent>,
    pub tol: f64,
    pub nodes: usize,
}

/// One row per tuple in `k, a, t, x, y, p` order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &k in &spec.k {
        for &a in &spec.a {
            for &t in &spec.t {
                for &x in &spec.x {
                    for &y in &spec.y {
                        for &p in &spec.p {
                            let line = WeightedLine::new(k, a);
                            let (lhs, rhs, gap, pass) = evaluate(spec, line, t, x, y, p)?;
                            rows.push(Row {
                                check: spec.check.name().to_string(),
                                k: k.to_string(),
                                a: a.to_string(),
                                t: t.to_string(),
                                x: x.to_string(),
                                y: y.to_string(),
                                p: p.to_string(),
                                lhs,
                                rhs,
                                gap,
                                pass,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn inequality(g: InequalityGap, tol: f64) -> (f64, f64, f64, bool) {
    (g.lhs, g.rhs, g.gap, g.holds(tol))
}

fn evaluate(spec: &SweepSpec, line: WeightedLine, t: f64, x: f64, y: f64, p: Exponent) -> Result<(f64, f64, f64, bool)> {
    let tol = spec.tol;
    let sampled = |f: &TestFunction| -> Result<heatlab::PotentialField> {
        let axis = padded_axis(line, t, x.min(y), x.max(y), 0.01)?;
        Ok(f.field(&heatlab::Grid::new(vec![axis])?)?)
    };
    Ok(match spec.check {
        SweepCheck::Contraction => {
            if x == y {
                return Err(CliError::usage("contraction: x and y must differ"));
            }
            let r = contraction_record_with(&WeightedSpace::line(line), &[x], &[y], t, p, spec.nodes)?;
            (r.distance, r.bound, r.distance - r.bound, r.ratio <= 1.0 + tol)
        }
        SweepCheck::Gradient => {
            let f = sampled(&TestFunction::Identity)?;
            let r = gradient_estimate_record(&line, &f, t, p, &[x], tol)?;
            (r.lhs[0], r.rhs[0], r.max_violation, r.holds(tol))
        }
        SweepCheck::LogSobolev => {
            let f = sampled(&TestFunction::Trig {
                offset: 2.0,
                slope: 0.0,
                terms: vec![[0.5, 1.0, 0.0], [0.25, 2.0, 1.0]],
            })?;
            inequality(log_sobolev_gap(&line, &f, t, x)?, tol)
        }
        SweepCheck::LogHarnack => inequality(log_harnack_gap(&line, t, x, y)?, tol),
        SweepCheck::GaussianLowerBound => inequality(gaussian_lower_bound_gap(&line, t, x, y)?, tol),
        SweepCheck::EntropyGeodesic => {
            let prof = geodesic_entropy_profile(&line, x, y, t, 11)?;
            (prof.quad_coeff, prof.expected, prof.quad_coeff - prof.expected, prof.certifies_with(tol, 0.01))
        }
    })
}
