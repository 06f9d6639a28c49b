//! Contraction ratios, sharpness detectors and the mechanisms that turn
//! sharpness into rigidity: the gradient-flow duality chain, quadratic entropy
//! along geodesics, the `(K, N)` obstruction and vanishing Hessians.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::{derivative_1d, PotentialField};
use crate::functionals::entropy;
use crate::heat::{
    derivative_step, kernel_axis, kernel_measure, kernel_measure_auto, semigroup_apply,
    semigroup_at, semigroup_derivative_at, KernelSpec, DEFAULT_SIGMAS,
};
use crate::report::{CheckEntry, Link, VerificationReport};
use crate::space::{
    check_dim, euclidean_distance, geodesic_point, Axis, Grid, WeightedLine, WeightedSpace,
};
use crate::transport::{potential_from_monotone_map, product_wp, wasserstein_1d, Exponent};

/// Grid size used for contraction records unless overridden.
pub const DEFAULT_NODES: usize = 2049;

/// Sharpness tolerance on contraction ratios.
pub const SHARPNESS_TOLERANCE: f64 = 1e-4;

/// Relative tolerance on the links of the duality chain.
pub const CHAIN_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRecord {
    pub space: WeightedSpace,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub p: Exponent,
    pub distance: f64,
    pub bound: f64,
    pub ratio: f64,
    pub nodes: usize,
}

pub fn contraction_record(
    space: &WeightedSpace,
    x: &[f64],
    y: &[f64],
    t: f64,
    p: Exponent,
) -> Result<ContractionRecord> {
    contraction_record_with(space, x, y, t, p, DEFAULT_NODES)
}

/// `W_p(p_t(x, .) m, p_t(y, .) m)` against `e^{-Kt} d(x, y)`, on `n`-node axes.
pub fn contraction_record_with(
    space: &WeightedSpace,
    x: &[f64],
    y: &[f64],
    t: f64,
    p: Exponent,
    n: usize,
) -> Result<ContractionRecord> {
    check_dim(space.dim(), x.len())?;
    check_dim(space.dim(), y.len())?;
    if x == y {
        return Err(invalid("y", "contraction ratio needs distinct points"));
    }
    let moving = x.iter().zip(y).filter(|(a, b)| a != b).count();
    if p != Exponent::Finite(2.0) && moving > 1 {
        return Err(LabError::Precondition(format!(
            "W_{p} on a product is only computed for pairs differing in one factor"
        )));
    }
    let distance = product_wp(space, x, y, t, p, n)?;
    let bound = (-space.curvature_bound() * t).exp() * euclidean_distance(x, y);
    Ok(ContractionRecord {
        space: space.clone(),
        x: x.to_vec(),
        y: y.to_vec(),
        t,
        p,
        distance,
        bound,
        ratio: distance / bound,
        nodes: n,
    })
}

/// Records with `ratio >= 1 - tol`, confirmed on the refined grid.
pub fn sharpness_sc_detect(
    records: &[ContractionRecord],
    tol: f64,
) -> Result<Vec<&ContractionRecord>> {
    let mut sharp = Vec::new();
    for r in records {
        if r.ratio < 1.0 - tol {
            continue;
        }
        let refined = contraction_record_with(&r.space, &r.x, &r.y, r.t, r.p, 2 * r.nodes - 1)?;
        if refined.ratio >= 1.0 - tol {
            sharp.push(r);
        }
    }
    Ok(sharp)
}

/// Points `x` in an axis whose kernels `p_t(x, .)` keep 8 standard deviations
/// inside it, `m` of them evenly spread over the middle 90%.
pub fn evaluation_window(spec: &KernelSpec, axis: &Axis, m: usize) -> Result<Vec<f64>> {
    let mom = spec.moments();
    let pad = DEFAULT_SIGMAS * mom.std() + axis.spacing();
    let lo = ((axis.lo + pad - mom.mean_shift) / mom.mean_factor).max(axis.lo);
    let hi = ((axis.hi - pad - mom.mean_shift) / mom.mean_factor).min(axis.hi);
    if !(hi > lo) || m < 2 {
        return Err(LabError::WindowTooWide(format!(
            "no point of [{}, {}] keeps the kernel 8 sigma inside the grid",
            axis.lo, axis.hi
        )));
    }
    let (c, r) = (0.5 * (lo + hi), 0.45 * (hi - lo));
    Ok((0..m)
        .map(|i| c - r + 2.0 * r * i as f64 / (m - 1) as f64)
        .collect())
}

fn check_window(spec: &KernelSpec, axis: &Axis, window: &[f64]) -> Result<()> {
    let mom = spec.moments();
    let pad = DEFAULT_SIGMAS * mom.std();
    for &x in window {
        let m = mom.mean(x);
        if !axis.contains(x) || m - pad < axis.lo || m + pad > axis.hi {
            return Err(LabError::WindowTooWide(format!(
                "x = {x}: kernel mean {m} is within 8 sigma of the grid edge"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimateRecord {
    pub t: f64,
    pub p: Exponent,
    pub points: Vec<f64>,
    /// `|grad P_t f|`
    pub lhs: Vec<f64>,
    /// `e^{-Kt} (P_t |grad f|^p)^{1/p}`, or `e^{-Kt} Lip(f)` for `p = inf`.
    pub rhs: Vec<f64>,
    /// `max |lhs - rhs|`
    pub max_gap: f64,
    /// `max (lhs - rhs)`
    pub max_violation: f64,
    pub tol: f64,
    pub sharp: bool,
}

impl GradientEstimateRecord {
    /// Node-wise `lhs <= rhs + tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Evaluates `(G_p)` for `f` at the window points. `f` must be sampled on a grid
/// reaching 8 kernel standard deviations beyond every window point. Sharpness is
/// `max |lhs - rhs| <= tol * max(1, max rhs)` for non-constant `f`.
pub fn gradient_estimate_record(
    line: &WeightedLine,
    f: &PotentialField,
    t: f64,
    p: Exponent,
    window: &[f64],
    tol: f64,
) -> Result<GradientEstimateRecord> {
    check_dim(1, f.grid().dim())?;
    let spec = KernelSpec::new(*line, t)?;
    let axis = f.grid().axis(0);
    check_window(&spec, axis, window)?;
    let step = derivative_step(&spec, axis.spacing());
    let lhs: Vec<f64> = semigroup_derivative_at(&spec, f, window, step)?
        .into_iter()
        .map(f64::abs)
        .collect();
    let decay = (-line.k * t).exp();
    let rhs: Vec<f64> = match p {
        Exponent::Infinity => {
            let lip = f
                .lipschitz_bound()
                .unwrap_or_else(|| f.lipschitz_constant());
            vec![decay * lip; window.len()]
        }
        Exponent::Finite(p) => {
            let grad = f.derivative()?;
            let powered = PotentialField::new(
                f.grid().clone(),
                grad.iter().map(|g| g.abs().powf(p)).collect(),
            )?;
            semigroup_at(&spec, &powered, window)?
                .into_iter()
                .map(|v| decay * v.max(0.0).powf(1.0 / p))
                .collect()
        }
    };
    let max_gap = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    let max_violation = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| l - r)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = rhs.iter().fold(1.0f64, |m, r| m.max(r.abs()));
    let sharp = !f.is_constant(1e-12) && max_gap <= tol * scale;
    Ok(GradientEstimateRecord {
        t,
        p,
        points: window.to_vec(),
        lhs,
        rhs,
        max_gap,
        max_violation,
        tol,
        sharp,
    })
}

/// Sharp flags for each candidate at the given grid.
pub fn sharpness_sg_detect(
    line: &WeightedLine,
    candidates: &[PotentialField],
    t: f64,
    p: Exponent,
    window: &[f64],
    tol: f64,
) -> Result<Vec<bool>> {
    candidates
        .iter()
        .map(|f| Ok(gradient_estimate_record(line, f, t, p, window, tol)?.sharp))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub points: Vec<f64>,
    /// `|grad g|` at each point.
    pub speeds: Vec<f64>,
    pub length: f64,
    /// `int_0^1 |grad g|^2 (gamma^a) da` by the left rule.
    pub energy: f64,
}

impl FlowTrace {
    pub fn endpoint(&self) -> f64 {
        *self.points.last().expect("trace has a start point")
    }
}

/// Explicit Euler for `gamma' = -grad g(gamma)` on `[0, 1]`, with central
/// differences at the nodes interpolated linearly in between.
pub fn gradient_flow_trace(g: &PotentialField, x0: f64, steps: usize) -> Result<FlowTrace> {
    check_dim(1, g.grid().dim())?;
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    let axis = *g.grid().axis(0);
    let h = axis.spacing();
    let v = g.values();
    let n = v.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => (v[1] - v[0]) / h,
            _ if i + 1 == n => (v[n - 1] - v[n - 2]) / h,
            _ => (v[i + 1] - v[i - 1]) / (2.0 * h),
        })
        .collect();
    let grad_at = |x: f64| {
        let s = ((x - axis.lo) / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let w = s - i as f64;
        (1.0 - w) * grad[i] + w * grad[i + 1]
    };
    let dt = 1.0 / steps as f64;
    let mut points = vec![x0];
    let mut speeds = Vec::with_capacity(steps + 1);
    let (mut length, mut energy) = (0.0, 0.0);
    let mut x = x0;
    for step in 0..steps {
        if !axis.contains(x) {
            return Err(LabError::TrajectoryEscaped { step, position: x });
        }
        let d = grad_at(x);
        speeds.push(d.abs());
        energy += dt * d * d;
        length += dt * d.abs();
        x -= dt * d;
        points.push(x);
    }
    if !axis.contains(x) {
        return Err(LabError::TrajectoryEscaped {
            step: steps,
            position: x,
        });
    }
    speeds.push(grad_at(x).abs());
    Ok(FlowTrace {
        points,
        speeds,
        length,
        energy,
    })
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

/// The chain `W_1(p_t(x,.), p_t(y,.)) >= P_t f(x) - P_t f(y) = int |grad g|^2 =
/// e^{-Kt} length(gamma) >= e^{-Kt} d(x, y)`, with `g = P_t f`, `gamma` its
/// gradient flow from `x` and `y = gamma^1`. `f` is sampled on a grid wide
/// enough for the kernels from every point within `e^{-Kt} Lip(f) + 1` of `x0`.
pub fn duality_chain_check(
    line: &WeightedLine,
    f: &PotentialField,
    t: f64,
    x0: f64,
) -> Result<VerificationReport> {
    let spec = KernelSpec::new(*line, t)?;
    let decay = (-line.k * t).exp();
    let lip = f
        .lipschitz_bound()
        .unwrap_or_else(|| f.lipschitz_constant());
    let reach = decay * lip + 1.0;
    let sg = gradient_estimate_record(
        line,
        f,
        t,
        Exponent::Infinity,
        &[x0 - reach, x0, x0 + reach],
        SHARPNESS_TOLERANCE,
    )?;
    if !sg.sharp {
        return Err(LabError::Precondition(format!(
            "f is not sharp for the p = inf gradient estimate (max gap {:.3e})",
            sg.max_gap
        )));
    }
    let eval = Grid::line(x0 - reach, x0 + reach, 2001)?;
    let g = semigroup_apply(&spec, f, &eval)?;
    let flow = gradient_flow_trace(&g, x0, 1000)?;
    let y = flow.endpoint();
    let pf = semigroup_at(&spec, f, &[x0, y])?;
    let drop = pf[0] - pf[1];
    let kernels = Grid::new(vec![kernel_axis(
        &spec,
        &[x0, y],
        DEFAULT_SIGMAS,
        DEFAULT_NODES,
    )?])?;
    let w1 = wasserstein_1d(
        &kernel_measure(&spec, x0, &kernels)?,
        &kernel_measure(&spec, y, &kernels)?,
        Exponent::Finite(1.0),
    )?;
    let values = [
        ("W1(p_t(x,.), p_t(y,.))", w1),
        ("P_t f(x) - P_t f(y)", drop),
        ("int |grad g|^2", flow.energy),
        ("e^{-Kt} length", decay * flow.length),
        ("e^{-Kt} d(x,y)", decay * (x0 - y).abs()),
    ];
    let links: Vec<Link> = values
        .windows(2)
        .map(|w| Link::new(format!("{} vs {}", w[0].0, w[1].0), w[0].1, w[1].1))
        .collect();
    let worst = links
        .iter()
        .map(|l| relative_gap(l.lhs, l.rhs).abs())
        .fold(0.0, f64::max);
    let entry = CheckEntry::new("duality-chain", &[*line])
        .param("t", t)
        .param("x", x0)
        .param("y", y)
        .links(links)
        .values(
            w1,
            decay * (x0 - y).abs(),
            worst,
            CHAIN_TOLERANCE,
            worst <= CHAIN_TOLERANCE,
        );
    let mut report = VerificationReport::new();
    report.push(entry);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicEntropyProfile {
    pub a_samples: Vec<f64>,
    pub entropy: Vec<f64>,
    pub w2sq: f64,
    /// Second derivative of the least-squares quadratic.
    pub quad_coeff: f64,
    /// `K W_2^2`
    pub expected: f64,
    /// Largest absolute deviation from the fitted quadratic.
    pub fit_residual: f64,
}

impl GeodesicEntropyProfile {
    pub fn entropy_range(&self) -> f64 {
        let (lo, hi) = self
            .entropy
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                (lo.min(e), hi.max(e))
            });
        hi - lo
    }

    /// Quadratic within `1e-4` of the entropy range and curvature within 1% of
    /// `K W_2^2`; both with absolute floors where the targets vanish.
    pub fn certifies(&self) -> bool {
        self.certifies_with(1e-4, 0.01)
    }

    pub fn certifies_with(&self, fit_tol: f64, coeff_tol: f64) -> bool {
        self.fit_residual <= (fit_tol * self.entropy_range()).max(1e-12)
            && (self.quad_coeff - self.expected).abs()
                <= (coeff_tol * self.expected.abs()).max(1e-8)
    }
}

/// Least-squares `c0 + c1 u + c2 u^2`.
fn fit_quadratic(u: &[f64], e: &[f64]) -> [f64; 3] {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&ui, &ei) in u.iter().zip(e) {
        let row = [1.0, ui, ui * ui];
        for r in 0..3 {
            atb[r] += row[r] * ei;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    let mut m = [[0.0; 4]; 3];
    for r in 0..3 {
        m[r][..3].copy_from_slice(&ata[r]);
        m[r][3] = atb[r];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("rows");
        m.swap(col, piv);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            let pivot = m[col];
            for (dst, src) in m[r][col..].iter_mut().zip(&pivot[col..]) {
                *dst -= f * src;
            }
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][3] - s) / m[r][r];
    }
    x
}

/// `a -> Ent(p_s(gamma^a, .) m)` along the segment from `x` to `y`, after
/// checking that the pair and a sub-pair are sharp.
pub fn geodesic_entropy_profile(
    line: &WeightedLine,
    x: f64,
    y: f64,
    s: f64,
    samples: usize,
) -> Result<GeodesicEntropyProfile> {
    if samples < 5 {
        return Err(invalid("samples", "need at least five samples"));
    }
    let space = WeightedSpace::line(*line);
    let quarter = geodesic_point(&[x], &[y], 0.25)?;
    let three = geodesic_point(&[x], &[y], 0.75)?;
    for (a, b) in [(vec![x], vec![y]), (quarter, three)] {
        let r = contraction_record(&space, &a, &b, s, Exponent::Finite(2.0))?;
        if r.ratio < 1.0 - SHARPNESS_TOLERANCE {
            return Err(LabError::Precondition(format!(
                "pair ({}, {}) is not sharp at time {s}: ratio {}",
                a[0], b[0], r.ratio
            )));
        }
    }
    let spec = KernelSpec::new(*line, s)?;
    let grid = Grid::new(vec![kernel_axis(
        &spec,
        &[x, y],
        DEFAULT_SIGMAS,
        DEFAULT_NODES,
    )?])?;
    let a_samples: Vec<f64> = (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect();
    let entropy_values = a_samples
        .iter()
        .map(|&a| {
            Ok(entropy(&kernel_measure(
                &spec,
                geodesic_point(&[x], &[y], a)?[0],
                &grid,
            )?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let w = wasserstein_1d(
        &kernel_measure(&spec, x, &grid)?,
        &kernel_measure(&spec, y, &grid)?,
        Exponent::Finite(2.0),
    )?;
    let centred: Vec<f64> = a_samples.iter().map(|a| a - 0.5).collect();
    let c = fit_quadratic(&centred, &entropy_values);
    let fit_residual = centred
        .iter()
        .zip(&entropy_values)
        .map(|(u, e)| (e - (c[0] + c[1] * u + c[2] * u * u)).abs())
        .fold(0.0, f64::max);
    Ok(GeodesicEntropyProfile {
        a_samples,
        entropy: entropy_values,
        w2sq: w * w,
        quad_coeff: 2.0 * c[2],
        expected: line.k * w * w,
        fit_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnProbe {
    pub n_dim: f64,
    /// First `a` with `E'' - K W_2^2 - E'^2 / N < -tol`.
    pub violation: Option<f64>,
    /// The defect `E'' - K W_2^2 - E'^2 / N` at the violation point (or its minimum).
    pub defect: f64,
    pub w2sq: f64,
}

/// Scans the extended geodesic `gamma^a = x + a (y - x)`, `a in [0, a_max]`, for
/// a failure of `(K, N)`-convexity of the entropy of `p_s(gamma^a, .) m`.
pub fn kn_convexity_probe(
    line: &WeightedLine,
    n_dim: f64,
    s: f64,
    a_max: f64,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<KnProbe> {
    if !(n_dim > 1.0) {
        return Err(invalid("N", "dimension parameter must exceed 1"));
    }
    if !(a_max > 0.0) || x == y {
        return Err(invalid("a_max", "need a nondegenerate extended geodesic"));
    }
    let spec = KernelSpec::new(*line, s)?;
    let steps = 2000;
    let da = a_max / steps as f64;
    let ent_at = |a: f64| -> Result<f64> {
        Ok(entropy(&kernel_measure_auto(
            &spec,
            x + a * (y - x),
            DEFAULT_NODES,
        )?))
    };
    let grid = Grid::new(vec![kernel_axis(
        &spec,
        &[x, y],
        DEFAULT_SIGMAS,
        DEFAULT_NODES,
    )?])?;
    let w = wasserstein_1d(
        &kernel_measure(&spec, x, &grid)?,
        &kernel_measure(&spec, y, &grid)?,
        Exponent::Finite(2.0),
    )?;
    let target = line.k * w * w;
    let mut e = Vec::with_capacity(steps + 2);
    e.push(ent_at(-da)?);
    let mut min_defect = f64::INFINITY;
    for j in 0..=steps + 1 {
        e.push(ent_at(j as f64 * da)?);
        if j >= 1 {
            // centred differences at a = (j - 1) da
            let (em, e0, ep) = (e[j - 1], e[j], e[j + 1]);
            let d1 = (ep - em) / (2.0 * da);
            let d2 = (ep - 2.0 * e0 + em) / (da * da);
            let defect = d2 - target - d1 * d1 / n_dim;
            if defect < -tol {
                return Ok(KnProbe {
                    n_dim,
                    violation: Some((j - 1) as f64 * da),
                    defect,
                    w2sq: w * w,
                });
            }
            min_defect = min_defect.min(defect);
        }
    }
    Ok(KnProbe {
        n_dim,
        violation: None,
        defect: min_defect,
        w2sq: w * w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianLinearity {
    pub linearity_residual: f64,
    pub hessian_norm: f64,
}

impl HessianLinearity {
    pub fn certifies(&self, tol: f64) -> bool {
        self.linearity_residual <= tol && self.hessian_norm <= tol
    }
}

/// Midpoint-linearity residual over segments in directions `(1,0)`, `(0,1)`,
/// `(1,1)`, `(1,-1)` of half-length `m` nodes, `m in {1, 2, 4, 8}`, and the
/// largest Frobenius norm of the central-difference Hessian.
pub fn hessian_linearity_check(phi: &PotentialField) -> Result<HessianLinearity> {
    let grid = phi.grid();
    check_dim(2, grid.dim())?;
    let (n0, n1) = (grid.axis(0).n as isize, grid.axis(1).n as isize);
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let v = phi.values();
    let at = |i: isize, j: isize| v[(i * n1 + j) as usize];
    let inside = |i: isize, j: isize| i >= 0 && j >= 0 && i < n0 && j < n1;
    let mut residual = 0.0f64;
    for (di, dj) in [(1isize, 0isize), (0, 1), (1, 1), (1, -1)] {
        for m in [1isize, 2, 4, 8] {
            for i in 0..n0 {
                for j in 0..n1 {
                    let (a, b) = ((i - m * di, j - m * dj), (i + m * di, j + m * dj));
                    if inside(a.0, a.1) && inside(b.0, b.1) {
                        residual =
                            residual.max((at(i, j) - 0.5 * (at(a.0, a.1) + at(b.0, b.1))).abs());
                    }
                }
            }
        }
    }
    let mut hess = 0.0f64;
    for i in 1..n0 - 1 {
        for j in 1..n1 - 1 {
            let xx = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (h0 * h0);
            let yy = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (h1 * h1);
            let xy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1))
                / (4.0 * h0 * h1);
            hess = hess.max((xx * xx + 2.0 * xy * xy + yy * yy).sqrt());
        }
    }
    Ok(HessianLinearity {
        linearity_residual: residual,
        hessian_norm: hess,
    })
}

/// Kantorovich potential between `p_t(x, .) m` and `p_t(y, .) m` on a product of
/// lines, as the sum of per-factor monotone-map potentials (each recovered on
/// a fine 1-D grid) sampled on `coarse`.
pub fn product_potential(
    space: &WeightedSpace,
    x: &[f64],
    y: &[f64],
    t: f64,
    coarse: &Grid,
) -> Result<PotentialField> {
    check_dim(space.dim(), x.len())?;
    check_dim(space.dim(), y.len())?;
    check_dim(space.dim(), coarse.dim())?;
    let factors = space
        .factors()
        .iter()
        .enumerate()
        .map(|(d, &line)| {
            let spec = KernelSpec::new(line, t)?;
            let grid = Grid::new(vec![kernel_axis(
                &spec,
                &[x[d], y[d]],
                DEFAULT_SIGMAS,
                DEFAULT_NODES,
            )?])?;
            potential_from_monotone_map(
                &kernel_measure(&spec, x[d], &grid)?,
                &kernel_measure(&spec, y[d], &grid)?,
                2.0,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    PotentialField::from_fn(coarse, |z| {
        factors
            .iter()
            .zip(z)
            .map(|(f, &zi)| f.interpolate(zi))
            .sum()
    })
}

/// Slope `phi'` of a 1-D potential, fourth order in the interior.
pub fn potential_slope(phi: &PotentialField) -> Result<Vec<f64>> {
    check_dim(1, phi.grid().dim())?;
    Ok(derivative_1d(phi.values(), phi.grid().spacing(0)))
}
