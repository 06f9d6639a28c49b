//! Entropy, Fisher information and the dimension-free functional inequalities
//! of the heat flow, each evaluated as a signed gap.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::PotentialField;
use crate::heat::{
    derivative_step, evolve_by_kernel, kernel_axis, kernel_masses, kernel_measure_auto,
    semigroup_at, semigroup_derivative_at, KernelSpec,
};
use crate::space::{check_dim, Axis, Grid, GridDensity, WeightedLine};
use crate::transport::{wasserstein_1d, Exponent};

/// Node mass below which a node's contribution to the entropy is dropped.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Default tolerance for `gap >= -tol` checks.
pub const GAP_TOLERANCE: f64 = 1e-4;

/// Relative growth on widening that marks a weighted integral as divergent.
pub const DIVERGENCE_GROWTH: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub entropy: f64,
    pub fisher: f64,
    pub second_moment: f64,
    pub base_point: Vec<f64>,
}

pub fn entropy_report(rho: &GridDensity, base_point: &[f64]) -> Result<EntropyReport> {
    Ok(EntropyReport {
        entropy: entropy(rho),
        fisher: fisher_information(rho)?,
        second_moment: second_moment(rho, base_point)?,
        base_point: base_point.to_vec(),
    })
}

/// `int rho log rho dm` by quadrature.
pub fn entropy(rho: &GridDensity) -> f64 {
    // the floor is on node mass: on k < 0 the density relative to m can be
    // astronomically small where the mass is not
    rho.masses()
        .iter()
        .zip(rho.log_density())
        .filter(|(m, l)| **m > ENTROPY_FLOOR && l.is_finite())
        .map(|(m, l)| m * l)
        .sum()
}

/// `int |grad rho|^2 / rho dm = int |grad log rho|^2 d(rho m)`, with central
/// differences of `log rho` on nodes interior along every axis.
pub fn fisher_information(rho: &GridDensity) -> Result<f64> {
    let grid = rho.grid();
    let strides = grid.strides();
    let logd = rho.log_density();
    let masses = rho.masses();
    let mut total = 0.0;
    for flat in 0..grid.len() {
        if !grid.is_interior(flat) {
            continue;
        }
        if logd[flat] == f64::NEG_INFINITY {
            return Err(LabError::NonPositiveDensity(format!(
                "interior node {flat}"
            )));
        }
        let mut sq = 0.0;
        for (d, s) in strides.iter().enumerate() {
            let (lo, hi) = (logd[flat - s], logd[flat + s]);
            if lo == f64::NEG_INFINITY || hi == f64::NEG_INFINITY {
                return Err(LabError::NonPositiveDensity(format!(
                    "neighbour of interior node {flat}"
                )));
            }
            let g = (hi - lo) / (2.0 * grid.spacing(d));
            sq += g * g;
        }
        total += masses[flat] * sq;
    }
    Ok(total)
}

/// `int |x - x0|^2 dmu`.
pub fn second_moment(rho: &GridDensity, x0: &[f64]) -> Result<f64> {
    check_dim(rho.grid().dim(), x0.len())?;
    Ok(rho.integrate(|x| x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum()))
}

/// `I_K(t) = int_0^t e^{Kr} dr`.
pub fn i_k(k: f64, t: f64) -> f64 {
    let kt = k * t;
    if kt.abs() <= 1e-8 {
        t + k * t * t / 2.0 + k * k * t * t * t / 6.0
    } else {
        kt.exp_m1() / k
    }
}

/// Tolerance policy for `>= 0` checks: `max(1e-4, 10 h^2 scale)`.
pub fn inequality_tolerance(h: f64, scale: f64) -> f64 {
    GAP_TOLERANCE.max(10.0 * h * h * scale.abs())
}

/// One side-by-side evaluation of an inequality `lhs >= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityGap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl InequalityGap {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            gap: lhs - rhs,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.gap >= -tol
    }
}

fn check_positive(f: &PotentialField) -> Result<()> {
    if f.values().iter().any(|&v| v <= 0.0) {
        Err(invalid(
            "f",
            "log-Sobolev needs a strictly positive function",
        ))
    } else {
        Ok(())
    }
}

/// `P_t(f log f) - P_t f log P_t f >= I_{2K}(t) |grad P_t f|^2 / P_t f` at `x`.
pub fn log_sobolev_gap(
    line: &WeightedLine,
    f: &PotentialField,
    t: f64,
    x: f64,
) -> Result<InequalityGap> {
    check_positive(f)?;
    let spec = KernelSpec::new(*line, t)?;
    let flogf = f.map(|v| v * v.ln())?;
    let pf = semigroup_at(&spec, f, &[x])?[0];
    let pflogf = semigroup_at(&spec, &flogf, &[x])?[0];
    let step = derivative_step(&spec, f.grid().spacing(0));
    let grad = semigroup_derivative_at(&spec, f, &[x], step)?[0];
    Ok(InequalityGap::new(
        pflogf - pf * pf.ln(),
        i_k(2.0 * line.k, t) * grad * grad / pf,
    ))
}

/// `log p_{2t}(x,y) + d^2 / (4 I_{2K}(t)) >= Ent(p_t(x, .) m)`.
pub fn log_harnack_gap(line: &WeightedLine, t: f64, x: f64, y: f64) -> Result<InequalityGap> {
    let spec = KernelSpec::new(*line, t)?;
    let ent = entropy(&kernel_measure_auto(&spec, x, 2049)?);
    let lhs =
        spec.at_time(2.0 * t)?.log_value(x, y) + (x - y).powi(2) / (4.0 * i_k(2.0 * line.k, t));
    Ok(InequalityGap::new(lhs, ent))
}

/// `p_{2t}(x,y) >= m(X)^{-1} exp(-d^2 / (4 I_{2K}(t)))`, for `k > 0` only.
pub fn gaussian_lower_bound_gap(
    line: &WeightedLine,
    t: f64,
    x: f64,
    y: f64,
) -> Result<InequalityGap> {
    let mass = line
        .total_mass()
        .ok_or_else(|| invalid("k", "the reference measure has infinite mass unless k > 0"))?;
    let spec = KernelSpec::new(*line, 2.0 * t)?;
    let rhs = (-(x - y).powi(2) / (4.0 * i_k(2.0 * line.k, t))).exp() / mass;
    Ok(InequalityGap::new(spec.value(x, y), rhs))
}

/// Both readings of the integrated EVI along `f_t = P_t rho0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EviGap {
    /// `I_K Ent(mu) + W_2^2(mu, f_t m)/2 >= I_K Ent(f_t) + I_K^2 F(f_t)/2`
    pub printed: InequalityGap,
    /// Same with the distance measured to the initial datum `f_0 m`.
    pub initial: InequalityGap,
}

/// Output grid of `evi_gap`: the source box pushed forward and padded by 8 sigma.
pub fn evolution_axis(spec: &KernelSpec, source: &Axis, n: usize) -> Result<Axis> {
    kernel_axis(spec, &[source.lo, source.hi], 8.0, n)
}

pub fn evi_gap(
    line: &WeightedLine,
    rho0: &GridDensity,
    mu: &GridDensity,
    t: f64,
) -> Result<EviGap> {
    check_dim(1, rho0.grid().dim())?;
    let spec = KernelSpec::new(*line, t)?;
    let out = Grid::new(vec![evolution_axis(
        &spec,
        rho0.grid().axis(0),
        rho0.grid().axis(0).n,
    )?])?;
    let ft = evolve_by_kernel(&spec, rho0, &out)?;
    let ik = i_k(line.k, t);
    let flow_side = ik * entropy(&ft) + 0.5 * ik * ik * fisher_information(&ft)?;
    let ent_mu = ik * entropy(mu);
    let w_t = wasserstein_1d(mu, &ft, Exponent::Finite(2.0))?;
    let w_0 = wasserstein_1d(mu, rho0, Exponent::Finite(2.0))?;
    Ok(EviGap {
        printed: InequalityGap::new(ent_mu + 0.5 * w_t * w_t, flow_side),
        initial: InequalityGap::new(ent_mu + 0.5 * w_0 * w_0, flow_side),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedIntegral {
    /// Value on the 8 sigma domain.
    pub value: f64,
    /// Value on the 12 sigma domain.
    pub widened: f64,
    pub relative_change: f64,
    pub divergent: bool,
}

/// `int p_t(x,y)^2 exp(d^2(x,y) / (D t)) m(dy)`, compared between 8 and 12
/// kernel standard deviations around the mean.
pub fn weighted_integral(line: &WeightedLine, t: f64, x: f64, d: f64) -> Result<WeightedIntegral> {
    if !(d > 0.0) {
        return Err(invalid("D", "exponent scale must be positive"));
    }
    let spec = KernelSpec::new(*line, t)?;
    let integral = |sigmas: f64, n: usize| -> Result<f64> {
        let axis = kernel_axis(&spec, &[x], sigmas, n)?;
        Ok((0..axis.n)
            .map(|i| {
                let y = axis.coordinate(i);
                (2.0 * spec.log_value(x, y) - line.weight(y) + (x - y).powi(2) / (d * t)).exp()
                    * axis.trapezoid_weight(i)
            })
            .sum())
    };
    let value = integral(8.0, 4097)?;
    let widened = integral(12.0, 6145)?;
    let relative_change = (widened - value) / value;
    Ok(WeightedIntegral {
        value,
        widened,
        relative_change,
        divergent: !widened.is_finite() || relative_change > DIVERGENCE_GROWTH,
    })
}

/// Relative change of `int |d/dx p_t(x, .)| dm` from an 8 sigma to a 10 sigma domain.
pub fn gradient_integrability(line: &WeightedLine, t: f64, x: f64) -> Result<(f64, f64)> {
    let spec = KernelSpec::new(*line, t)?;
    let narrow = crate::heat::gradient_l1_norm(&spec, x, &kernel_axis(&spec, &[x], 8.0, 2049)?);
    let wide = crate::heat::gradient_l1_norm(&spec, x, &kernel_axis(&spec, &[x], 10.0, 2561)?);
    Ok((narrow, ((wide - narrow) / narrow).abs()))
}

/// Captured kernel mass at `x` on an axis, before normalization.
pub fn captured_mass(spec: &KernelSpec, x: f64, axis: &Axis) -> f64 {
    kernel_masses(spec, x, axis).1
}
