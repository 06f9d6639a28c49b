//! Executes a scenario check by check into a `VerificationReport`.

use heatlab::functionals::{evi_gap, DIVERGENCE_GROWTH, gaussian_lower_bound_gap, log_harnack_gap, log_sobolev_gap, weighted_integral};
use heatlab::heat::kernel_axis;
use heatlab::report::{CheckEntry, VerificationReport};
use heatlab::rigidity::{
    contraction_record_with, duality_chain_check, geodesic_entropy_profile, gradient_estimate_record,
    hessian_linearity_check, kn_convexity_probe, product_potential,
};
use heatlab::transport::Exponent;
use heatlab::{Axis, Grid, GridDensity, KernelSpec, TestFunction, WeightedLine, WeightedSpace};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::scenario::{Check, Scenario};

/// Samples along each geodesic in the entropy profile.
const ENTROPY_SAMPLES: usize = 11;
/// Coefficient tolerance of the entropy profile, relative to `K W_2^2`.
const ENTROPY_COEFF_TOL: f64 = 0.01;
/// Variance of the Gaussians fed to the EVI.
const EVI_VARIANCE: f64 = 0.5;

pub fn run_scenario(scenario: &Scenario) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    for &check in &scenario.checks {
        let entries = match check {
            Check::Contraction => contraction(scenario)?,
            Check::Gradient => gradient(scenario)?,
            Check::EntropyGeodesic => entropy_geodesic(scenario)?,
            Check::FunctionalInequalities => functional_inequalities(scenario)?,
            Check::DualityChain => duality_chain(scenario)?,
            Check::KnProbe => kn_probe(scenario)?,
            Check::Splitting => splitting(scenario)?,
        };
        for e in entries {
            report.push(e);
        }
    }
    let names: Vec<_> = scenario.checks.iter().map(|c| c.name()).collect();
    report.metadata.insert("checks".into(), json!(names));
    report.metadata.insert("grid_nodes".into(), json!(scenario.grid.nodes));
    report.metadata.insert("grid_spacing".into(), json!(scenario.grid.spacing));
    Ok(report)
}

fn point_value(p: &[f64]) -> Value {
    if p.len() == 1 {
        json!(p[0])
    } else {
        json!(p)
    }
}

fn exponent_value(p: Exponent) -> Value {
    match p {
        Exponent::Finite(v) => json!(v),
        Exponent::Infinity => json!("inf"),
    }
}

fn pairs(points: &[Vec<f64>]) -> Vec<(&[f64], &[f64])> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] != points[j] {
                out.push((points[i].as_slice(), points[j].as_slice()));
            }
        }
    }
    out
}

fn require_pairs(scenario: &Scenario, check: Check) -> Result<Vec<(&[f64], &[f64])>> {
    let p = pairs(&scenario.points);
    if p.is_empty() {
        return Err(CliError::usage(format!("{check}: needs two distinct points")));
    }
    Ok(p)
}

fn single_line(scenario: &Scenario, check: Check) -> Result<WeightedLine> {
    match scenario.space.factors() {
        [line] => Ok(*line),
        _ => Err(CliError::usage(format!("{check}: needs a one-dimensional space"))),
    }
}

fn coords(scenario: &Scenario) -> Vec<f64> {
    scenario.points.iter().map(|p| p[0]).collect()
}

/// Axis with 10 kernel standard deviations beyond `[lo, hi]` and spacing at most `h`.
pub fn padded_axis(line: WeightedLine, t: f64, lo: f64, hi: f64, h: f64) -> Result<Axis> {
    let spec = KernelSpec::new(line, t)?;
    let probe = kernel_axis(&spec, &[lo, hi], 10.0, 3)?;
    let n = ((probe.hi - probe.lo) / h).ceil() as usize + 1;
    Ok(kernel_axis(&spec, &[lo, hi], 10.0, n | 1)?)
}

fn sample(f: &TestFunction, line: WeightedLine, t: f64, lo: f64, hi: f64, h: f64) -> Result<heatlab::PotentialField> {
    let grid = Grid::new(vec![padded_axis(line, t, lo, hi, h)?])?;
    Ok(f.field(&grid)?)
}

fn span(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn contraction(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let tol = s.tolerance(Check::Contraction);
    let mut out = Vec::new();
    for (x, y) in require_pairs(s, Check::Contraction)? {
        for &t in &s.times {
            for &p in &s.exponents {
                let r = contraction_record_with(&s.space, x, y, t, p, s.grid.nodes)?;
                out.push(
                    CheckEntry::new(Check::Contraction.name(), s.space.factors())
                        .param("t", t)
                        .param("p", exponent_value(p))
                        .param("x", point_value(x))
                        .param("y", point_value(y))
                        .values(r.distance, r.bound, r.distance - r.bound, tol, r.ratio <= 1.0 + tol)
                        .detail(json!({ "ratio": r.ratio, "sharp": r.ratio >= 1.0 - tol })),
                );
            }
        }
    }
    Ok(out)
}

fn gradient(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let line = single_line(s, Check::Gradient)?;
    let tol = s.tolerance(Check::Gradient);
    let window = coords(s);
    let (lo, hi) = span(&window);
    let mut out = Vec::new();
    for &t in &s.times {
        let f = sample(&s.function, line, t, lo, hi, s.grid.spacing)?;
        for &p in &s.exponents {
            let r = gradient_estimate_record(&line, &f, t, p, &window, tol)?;
            let worst = (0..window.len())
                .max_by(|&i, &j| (r.lhs[i] - r.rhs[i]).total_cmp(&(r.lhs[j] - r.rhs[j])))
                .expect("window is not empty");
            out.push(
                CheckEntry::new(Check::Gradient.name(), s.space.factors())
                    .param("t", t)
                    .param("p", exponent_value(p))
                    .param("x", window[worst])
                    .values(r.lhs[worst], r.rhs[worst], r.max_violation, tol, r.holds(tol))
                    .detail(json!({ "sharp": r.sharp, "max_gap": r.max_gap, "points": window.len() })),
            );
        }
    }
    Ok(out)
}

fn entropy_geodesic(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let line = single_line(s, Check::EntropyGeodesic)?;
    let tol = s.tolerance(Check::EntropyGeodesic);
    let mut out = Vec::new();
    for (x, y) in require_pairs(s, Check::EntropyGeodesic)? {
        for &t in &s.times {
            let prof = geodesic_entropy_profile(&line, x[0], y[0], t, ENTROPY_SAMPLES)?;
            out.push(
                CheckEntry::new(Check::EntropyGeodesic.name(), s.space.factors())
                    .param("t", t)
                    .param("x", x[0])
                    .param("y", y[0])
                    .values(
                        prof.quad_coeff,
                        prof.expected,
                        prof.quad_coeff - prof.expected,
                        tol,
                        prof.certifies_with(tol, ENTROPY_COEFF_TOL),
                    )
                    .detail(json!({
                        "fit_residual": prof.fit_residual,
                        "entropy_range": prof.entropy_range(),
                        "w2sq": prof.w2sq,
                        "coefficient_tolerance": ENTROPY_COEFF_TOL,
                    })),
            );
        }
    }
    Ok(out)
}

fn gaussian(line: WeightedLine, grid: &Grid, m: f64) -> Result<GridDensity> {
    Ok(GridDensity::from_lebesgue_log_density(&WeightedSpace::line(line), grid, |z| {
        -(z[0] - m).powi(2) / (2.0 * EVI_VARIANCE)
    })?)
}

fn functional_inequalities(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let check = Check::FunctionalInequalities;
    let line = single_line(s, check)?;
    if !(s.d > 2.0) {
        return Err(CliError::usage("d: the weighted integral is only claimed finite for d > 2"));
    }
    let tol = s.tolerance(check);
    let xs = coords(s);
    let (lo, hi) = span(&xs);
    let entry = |name: &str, t: f64| CheckEntry::new(check.name(), s.space.factors()).param("inequality", name).param("t", t);
    let mut out = Vec::new();
    for &t in &s.times {
        let f = sample(&s.positive_function, line, t, lo, hi, s.grid.spacing)?;
        for &x in &xs {
            let g = log_sobolev_gap(&line, &f, t, x)?;
            out.push(entry("log-sobolev", t).param("x", x).values(g.lhs, g.rhs, g.gap, tol, g.holds(tol)));
        }
        for &x in &xs {
            for &y in &xs {
                let g = log_harnack_gap(&line, t, x, y)?;
                out.push(
                    entry("log-harnack", t)
                        .param("x", x)
                        .param("y", y)
                        .values(g.lhs, g.rhs, g.gap, tol, g.holds(tol)),
                );
                if line.k > 0.0 {
                    let g = gaussian_lower_bound_gap(&line, t, x, y)?;
                    out.push(
                        entry("gaussian-lower-bound", t)
                            .param("x", x)
                            .param("y", y)
                            .values(g.lhs, g.rhs, g.gap, tol, g.holds(tol)),
                    );
                }
            }
        }
        for &x in &xs {
            for &y in &xs {
                if x == y {
                    continue;
                }
                let grid = Grid::line(x.min(y) - 8.0, x.max(y) + 8.0, 1025)?;
                let g = evi_gap(&line, &gaussian(line, &grid, x)?, &gaussian(line, &grid, y)?, t)?;
                out.push(
                    entry("evi", t)
                        .param("x", x)
                        .param("y", y)
                        .values(g.printed.lhs, g.printed.rhs, g.printed.gap, tol, g.printed.holds(tol))
                        .detail(json!({ "initial_datum_gap": g.initial.gap })),
                );
            }
        }
        for &x in &xs {
            let w = weighted_integral(&line, t, x, s.d)?;
            out.push(
                entry("weighted-integral", t)
                    .param("x", x)
                    .param("d", s.d)
                    .values(w.widened, w.value, w.widened - w.value, DIVERGENCE_GROWTH, !w.divergent)
                    .detail(json!({ "relative_change": w.relative_change })),
            );
        }
    }
    Ok(out)
}

fn duality_chain(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let check = Check::DualityChain;
    let line = single_line(s, check)?;
    let tol = s.tolerance(check);
    let lip = s
        .function
        .lipschitz()
        .ok_or_else(|| CliError::usage("function: the duality chain needs a Lipschitz function"))?;
    let xs = coords(s);
    let (lo, hi) = span(&xs);
    let mut out = Vec::new();
    for &t in &s.times {
        let reach = (-line.k * t).exp() * lip + 2.0;
        let f = sample(&s.function, line, t, lo - reach, hi + reach, s.grid.spacing / 2.0)?;
        for &x in &xs {
            for mut e in duality_chain_check(&line, &f, t, x)?.entries {
                e.tol = tol;
                e.pass = e.gap <= tol;
                out.push(e);
            }
        }
    }
    Ok(out)
}

fn kn_probe(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let check = Check::KnProbe;
    let line = single_line(s, check)?;
    let tol = s.tolerance(check);
    let (x, y) = require_pairs(s, check)?[0];
    // the probe only stays silent when E' = 0, i.e. on the unweighted line
    let expected = line.k != 0.0 || line.a != 0.0;
    let mut out = Vec::new();
    for &t in &s.times {
        let r = kn_convexity_probe(&line, s.kn.n, t, s.kn.a_max, x[0], y[0], tol)?;
        let found = r.violation.is_some();
        out.push(
            CheckEntry::new(check.name(), s.space.factors())
                .param("t", t)
                .param("x", x[0])
                .param("y", y[0])
                .param("n", s.kn.n)
                .param("a_max", s.kn.a_max)
                .values(r.defect, -tol, r.defect + tol, tol, found == expected)
                .detail(json!({
                    "violation_expected": expected,
                    "violation_located": found,
                    "a_star": r.violation,
                })),
        );
    }
    Ok(out)
}

fn splitting(s: &Scenario) -> Result<Vec<CheckEntry>> {
    let check = Check::Splitting;
    if s.dim() != 2 {
        return Err(CliError::usage("splitting: needs a two-dimensional space"));
    }
    let tol = s.tolerance(check);
    let mut out = Vec::new();
    for (x, y) in require_pairs(s, check)? {
        let axes = (0..2)
            .map(|d| Axis::new(x[d].min(y[d]) - 1.0, x[d].max(y[d]) + 1.0, 31))
            .collect::<heatlab::Result<Vec<_>>>()?;
        let coarse = Grid::new(axes)?;
        for &t in &s.times {
            let sharp = contraction_record_with(&s.space, x, y, t, Exponent::Finite(2.0), s.grid.nodes)?.ratio;
            let r = hessian_linearity_check(&product_potential(&s.space, x, y, t, &coarse)?)?;
            let worst = r.linearity_residual.max(r.hessian_norm);
            out.push(
                CheckEntry::new(check.name(), s.space.factors())
                    .param("t", t)
                    .param("x", point_value(x))
                    .param("y", point_value(y))
                    .values(worst, 0.0, worst, tol, r.certifies(tol))
                    .detail(json!({
                        "linearity_residual": r.linearity_residual,
                        "hessian_norm": r.hessian_norm,
                        "contraction_ratio": sharp,
                    })),
            );
        }
    }
    Ok(out)
}
