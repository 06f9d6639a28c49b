//! Heat kernels of weighted lines and their products.
//!
//! For `f(x) = k x^2 / 2 + a x` the generator `u'' - f' u'` drives an
//! Ornstein-Uhlenbeck type diffusion, so `p_t(x, .) m` is a Gaussian measure:
//!
//! * `k = 0`: mean `x - a t`, variance `2t`;
//! * `k != 0`: mean `e^{-kt} x - (a/k)(1 - e^{-kt})`, variance `(1 - e^{-2kt}) / k`.
//!
//! `k = -2, a = 0` is the Mehler kernel, kept in its raw form in
//! [`mehler_kernel`] as a pointwise cross-check of the moment form.
//! [`crank_nicolson_evolve`] solves the Fokker-Planck equation on a truncated
//! box and serves as an independent oracle for all of the above.

use std::f64::consts::PI;

use crate::error::{invalid, LabError, Result};
use crate::field::PotentialField;
use crate::space::{check_dim, Axis, Grid, GridDensity, WeightedLine, WeightedSpace};

/// Minimum kernel mass that must fall on the grid.
pub const CAPTURE_TOLERANCE: f64 = 1e-6;

/// Default truncation of heat-kernel domains, in standard deviations.
pub const DEFAULT_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub line: WeightedLine,
    pub t: f64,
}

/// `m(t, x) = mean_factor * x + mean_shift`, plus the common variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    pub mean_factor: f64,
    pub mean_shift: f64,
    pub variance: f64,
}

impl KernelMoments {
    pub fn mean(&self, x: f64) -> f64 {
        self.mean_factor * x + self.mean_shift
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

impl KernelSpec {
    pub fn new(line: WeightedLine, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("time must be positive, got {t}")));
        }
        Ok(Self { line, t })
    }

    pub fn moments(&self) -> KernelMoments {
        let WeightedLine { k, a } = self.line;
        let t = self.t;
        if k == 0.0 {
            KernelMoments {
                mean_factor: 1.0,
                mean_shift: -a * t,
                variance: 2.0 * t,
            }
        } else {
            KernelMoments {
                mean_factor: (-k * t).exp(),
                mean_shift: (a / k) * (-k * t).exp_m1(),
                variance: -(-2.0 * k * t).exp_m1() / k,
            }
        }
    }

    /// `ln p_t(x, y)`, density with respect to the reference measure.
    pub fn log_value(&self, x: f64, y: f64) -> f64 {
        log_gaussian(y, &self.moments(), x) + self.line.weight(y)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.log_value(x, y).exp()
    }

    /// Same kernel at a different time.
    pub fn at_time(&self, t: f64) -> Result<Self> {
        Self::new(self.line, t)
    }
}

fn log_gaussian(y: f64, m: &KernelMoments, x: f64) -> f64 {
    let d = y - m.mean(x);
    -0.5 * (2.0 * PI * m.variance).ln() - d * d / (2.0 * m.variance)
}

pub fn kernel_value(spec: &KernelSpec, x: f64, y: f64) -> f64 {
    spec.value(x, y)
}

/// The Mehler kernel on `R^1_{-2}` written out directly.
pub fn mehler_kernel(t: f64, x: f64, y: f64) -> f64 {
    let e2 = (-2.0 * t).exp();
    let denom = -(-4.0 * t).exp_m1();
    (2.0 * PI * (2.0 * t).sinh()).powf(-0.5)
        * ((2.0 * x * y * e2 - x * x - y * y) / denom - t).exp()
}

/// Standard heat kernel of the unweighted line (generator `d^2/dx^2`).
pub fn euclidean_kernel(t: f64, x: f64, z: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-(x - z) * (x - z) / (4.0 * t)).exp()
}

/// `p_t(x,z) e^{-a^2 t} e^{-a(x+z)}`: the drift-tilted kernel in its printed form.
///
/// This is the heat kernel of the line with reference measure `e^{2az} dz`,
/// i.e. `WeightedLine { k: 0, a: -2a }`, not of `e^{-az} dz`.
pub fn printed_drift_tilt(a: f64, t: f64, x: f64, z: f64) -> f64 {
    euclidean_kernel(t, x, z) * (-a * a * t).exp() * (-a * (x + z)).exp()
}

/// Ground-state transform for the line with reference measure `e^{-az} dz`:
/// `p_t(x,z) e^{-a^2 t / 4} e^{a(x+z)/2}`.
pub fn ground_state_drift_tilt(a: f64, t: f64, x: f64, z: f64) -> f64 {
    euclidean_kernel(t, x, z) * (-a * a * t / 4.0).exp() * (a * (x + z) / 2.0).exp()
}

/// Axis covering every kernel `p_t(x, .)` with `x` in `points`, plus the points
/// themselves, padded by `sigmas` standard deviations.
pub fn kernel_axis(spec: &KernelSpec, points: &[f64], sigmas: f64, n: usize) -> Result<Axis> {
    if points.is_empty() {
        return Err(invalid("points", "need at least one point"));
    }
    let mom = spec.moments();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in points {
        let m = mom.mean(x);
        lo = lo.min(x.min(m));
        hi = hi.max(x.max(m));
    }
    let pad = sigmas * mom.std();
    Axis::new(lo - pad, hi + pad, n)
}

/// Lebesgue quadrature masses of `p_t(x, .) m` on an axis, and their sum
/// before normalization.
pub(crate) fn kernel_masses(spec: &KernelSpec, x: f64, axis: &Axis) -> (Vec<f64>, f64) {
    let mom = spec.moments();
    let masses: Vec<f64> = (0..axis.n)
        .map(|i| log_gaussian(axis.coordinate(i), &mom, x).exp() * axis.trapezoid_weight(i))
        .collect();
    let total = masses.iter().sum();
    (masses, total)
}

fn check_capture(total: f64) -> Result<()> {
    if total < 1.0 - CAPTURE_TOLERANCE {
        Err(LabError::Truncation {
            captured: total,
            required: 1.0 - CAPTURE_TOLERANCE,
        })
    } else {
        Ok(())
    }
}

/// The probability measure `p_t(x, .) m` on a 1-D grid, renormalized to mass one.
pub fn kernel_measure(spec: &KernelSpec, x: f64, grid: &Grid) -> Result<GridDensity> {
    check_dim(1, grid.dim())?;
    let (_, total) = kernel_masses(spec, x, grid.axis(0));
    check_capture(total)?;
    let logd = grid
        .line_nodes()
        .iter()
        .map(|&y| spec.log_value(x, y))
        .collect();
    GridDensity::from_log_density(&WeightedSpace::line(spec.line), grid, logd)
}

/// Kernel measure on its default domain (`8 sigma` around the mean).
pub fn kernel_measure_auto(spec: &KernelSpec, x: f64, n: usize) -> Result<GridDensity> {
    let grid = Grid::new(vec![kernel_axis(spec, &[x], DEFAULT_SIGMAS, n)?])?;
    kernel_measure(spec, x, &grid)
}

/// `(P_t f)(x)` at each point by quadrature over the grid of `f`.
pub fn semigroup_at(spec: &KernelSpec, f: &PotentialField, points: &[f64]) -> Result<Vec<f64>> {
    check_dim(1, f.grid().dim())?;
    let axis = f.grid().axis(0);
    points
        .iter()
        .map(|&x| {
            let (masses, total) = kernel_masses(spec, x, axis);
            check_capture(total)?;
            Ok(masses
                .iter()
                .zip(f.values())
                .map(|(m, v)| m * v)
                .sum::<f64>()
                / total)
        })
        .collect()
}

/// `P_t f` on the nodes of an evaluation grid.
pub fn semigroup_apply(
    spec: &KernelSpec,
    f: &PotentialField,
    eval: &Grid,
) -> Result<PotentialField> {
    check_dim(1, eval.dim())?;
    let values = semigroup_at(spec, f, &eval.line_nodes())?;
    PotentialField::new(eval.clone(), values)
}

/// Derivative of `x -> (P_t f)(x)`: Richardson combination of central differences
/// with steps `step` and `step / 2`.
pub fn semigroup_derivative_at(
    spec: &KernelSpec,
    f: &PotentialField,
    points: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    let mut stencil = Vec::with_capacity(points.len() * 4);
    for &x in points {
        stencil.extend_from_slice(&[x - step, x + step, x - 0.5 * step, x + 0.5 * step]);
    }
    let g = semigroup_at(spec, f, &stencil)?;
    Ok(g.chunks(4)
        .map(|c| {
            let coarse = (c[1] - c[0]) / (2.0 * step);
            let fine = (c[3] - c[2]) / step;
            (4.0 * fine - coarse) / 3.0
        })
        .collect())
}

/// Finite-difference step used for gradients of `P_t f`: the grid spacing,
/// shrunk where the semigroup compresses space (`k < 0`).
pub fn derivative_step(spec: &KernelSpec, h: f64) -> f64 {
    0.25 * h * (spec.line.k * spec.t).min(0.0).exp()
}

/// Tensor product of per-factor kernel measures.
pub fn product_kernel_measure(
    space: &WeightedSpace,
    x: &[f64],
    t: f64,
    grid: &Grid,
) -> Result<GridDensity> {
    check_dim(space.dim(), x.len())?;
    check_dim(space.dim(), grid.dim())?;
    let specs = space
        .factors()
        .iter()
        .map(|&l| KernelSpec::new(l, t))
        .collect::<Result<Vec<_>>>()?;
    for (d, spec) in specs.iter().enumerate() {
        check_capture(kernel_masses(spec, x[d], grid.axis(d)).1)?;
    }
    let logd = (0..grid.len())
        .map(|i| {
            let y = grid.node(i);
            specs
                .iter()
                .enumerate()
                .map(|(d, s)| s.log_value(x[d], y[d]))
                .sum()
        })
        .collect();
    GridDensity::from_log_density(space, grid, logd)
}

/// `f_t = P_t rho0` sampled on `out`, by quadrature of the kernel against the
/// initial measure (log-sum-exp over the source nodes).
pub fn evolve_by_kernel(spec: &KernelSpec, rho0: &GridDensity, out: &Grid) -> Result<GridDensity> {
    check_dim(1, rho0.grid().dim())?;
    check_dim(1, out.dim())?;
    if rho0.space().factors()[0] != spec.line {
        return Err(invalid(
            "rho0",
            "initial density lives on a different weighted line",
        ));
    }
    let mom = spec.moments();
    let src: Vec<(f64, f64)> = rho0
        .grid()
        .line_nodes()
        .into_iter()
        .zip(rho0.masses())
        .filter(|(_, m)| *m > 0.0)
        .map(|(z, m)| (mom.mean(z), m.ln()))
        .collect();
    let norm = -0.5 * (2.0 * PI * mom.variance).ln();
    let logd = out
        .line_nodes()
        .iter()
        .map(|&y| {
            let terms = src
                .iter()
                .map(|&(m, lm)| lm - (y - m) * (y - m) / (2.0 * mom.variance));
            let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
            top + terms.map(|v| (v - top).exp()).sum::<f64>().ln() + norm + spec.line.weight(y)
        })
        .collect();
    GridDensity::from_log_density(&WeightedSpace::line(spec.line), out, logd)
}

/// Tridiagonal Fokker-Planck operator on Lebesgue densities `q`, in conservative
/// form `q_t = (e^{-f} (q e^f)')'` with zero flux through both ends.
struct FokkerPlanck {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl FokkerPlanck {
    fn new(line: &WeightedLine, axis: &Axis) -> Self {
        let n = axis.n;
        let h = axis.spacing();
        let x: Vec<f64> = axis.nodes();
        // alpha_e = e^{f_{i+1} - f_e}, beta_e = e^{f_i - f_e} for the edge e = i + 1/2
        let (alpha, beta): (Vec<f64>, Vec<f64>) = (0..n - 1)
            .map(|i| {
                let fe = line.weight(0.5 * (x[i] + x[i + 1]));
                (
                    (line.weight(x[i + 1]) - fe).exp(),
                    (line.weight(x[i]) - fe).exp(),
                )
            })
            .unzip();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let scale = 1.0 / (h * axis.trapezoid_weight(i));
            if i + 1 < n {
                upper[i] = alpha[i] * scale;
                diag[i] -= beta[i] * scale;
            }
            if i > 0 {
                lower[i] = beta[i - 1] * scale;
                diag[i] -= alpha[i - 1] * scale;
            }
        }
        Self { lower, diag, upper }
    }

    fn apply(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * q[i];
                if i > 0 {
                    v += self.lower[i] * q[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * q[i + 1];
                }
                v
            })
            .collect()
    }

    /// Solves `(I - theta dt A) x = rhs`.
    fn solve_shifted(&self, theta_dt: f64, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let a: Vec<f64> = self.lower.iter().map(|l| -theta_dt * l).collect();
        let b: Vec<f64> = self.diag.iter().map(|d| 1.0 - theta_dt * d).collect();
        let c: Vec<f64> = self.upper.iter().map(|u| -theta_dt * u).collect();
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c[0] / b[0];
        dp[0] = rhs[0] / b[0];
        for i in 1..n {
            let m = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }
}

/// Evolves a density under the weighted heat flow with Crank-Nicolson time
/// stepping (two half-steps of backward Euler first, to damp the stiff modes
/// of a near-Dirac start) and homogeneous Neumann ends.
pub fn crank_nicolson_evolve(
    line: &WeightedLine,
    rho0: &GridDensity,
    t: f64,
    steps: usize,
) -> Result<GridDensity> {
    check_dim(1, rho0.grid().dim())?;
    if !(t > 0.0) {
        return Err(invalid("t", "time must be positive"));
    }
    if steps < 2 {
        return Err(invalid("steps", "need at least two steps"));
    }
    if rho0.space().factors()[0] != *line {
        return Err(invalid(
            "rho0",
            "initial density lives on a different weighted line",
        ));
    }
    let axis = *rho0.grid().axis(0);
    let op = FokkerPlanck::new(line, &axis);
    let dt = t / steps as f64;
    let volumes: Vec<f64> = (0..axis.n).map(|i| axis.trapezoid_weight(i)).collect();
    let mut q = rho0.lebesgue_density();

    let check = |q: &[f64]| -> Result<()> {
        let min = q
            .iter()
            .zip(&volumes)
            .map(|(v, w)| v * w)
            .fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            Err(LabError::Unstable { min })
        } else {
            Ok(())
        }
    };

    for _ in 0..2 {
        q = op.solve_shifted(0.5 * dt, &q);
    }
    check(&q)?;
    for _ in 1..steps {
        let aq = op.apply(&q);
        let rhs: Vec<f64> = q.iter().zip(&aq).map(|(v, d)| v + 0.5 * dt * d).collect();
        q = op.solve_shifted(0.5 * dt, &rhs);
        check(&q)?;
    }
    let logd = q
        .iter()
        .zip(axis.nodes())
        .map(|(&v, x)| {
            if v > 0.0 {
                v.ln() + line.weight(x)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    GridDensity::from_log_density(rho0.space(), rho0.grid(), logd)
}

/// Total-variation distance between two densities on the same grid.
pub fn total_variation(mu: &GridDensity, nu: &GridDensity) -> Result<f64> {
    if mu.grid() != nu.grid() {
        return Err(invalid("nu", "total variation needs a shared grid"));
    }
    Ok(0.5
        * mu.masses()
            .iter()
            .zip(nu.masses())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// `int |d/dx p_t(x, y)| m(dy)` by central differences in `x` on the given axis.
pub fn gradient_l1_norm(spec: &KernelSpec, x: f64, axis: &Axis) -> f64 {
    let step = 1e-4 * spec.moments().std();
    let (plus, _) = kernel_masses(spec, x + step, axis);
    let (minus, _) = kernel_masses(spec, x - step, axis);
    plus.iter()
        .zip(&minus)
        .map(|(p, m)| (p - m).abs())
        .sum::<f64>()
        / (2.0 * step)
}
