//! Optimal transport between grid densities: 1-D quantile distances, an exact
//! min-cost-flow solver for small instances, Kantorovich potentials,
//! c-transforms and the Hopf-Lax semigroup.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::field::PotentialField;
use crate::heat::{kernel_axis, kernel_measure, KernelSpec, DEFAULT_SIGMAS};
use crate::space::{check_dim, euclidean_distance, Grid, GridDensity, WeightedSpace};

/// Quantile grid size for continuous 1-D distances.
pub const QUANTILE_POINTS: usize = 1 << 14;

/// Node limit per side for [`discrete_ot`].
pub const LP_NODE_LIMIT: usize = 256;

/// Masses below this are treated as empty by the flow solver.
const FLOW_EPS: f64 = 1e-16;

/// Transport exponent `p in [1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(Self::Finite(p))
        } else {
            Err(invalid(
                "p",
                format!("exponent must lie in [1, inf), got {p}"),
            ))
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Self::Finite(p) => *p,
            Self::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(Self::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| invalid("p", format!("cannot parse exponent `{s}`")))?;
                if p.is_infinite() {
                    Ok(Self::Infinity)
                } else {
                    Self::finite(p)
                }
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = LabError;

    fn try_from(r: ExponentRepr) -> Result<Self> {
        match r {
            ExponentRepr::Number(p) => Self::finite(p),
            ExponentRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Exponent> for ExponentRepr {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Finite(p) => Self::Number(p),
            Exponent::Infinity => Self::Text("inf".into()),
        }
    }
}

fn check_line(rho: &GridDensity) -> Result<()> {
    check_dim(1, rho.grid().dim())?;
    rho.ensure_normalized()
}

/// Piecewise-linear CDF of a 1-D density: `F` at every node, from the trapezoid
/// cell masses.
#[derive(Debug, Clone)]
pub struct LineCdf {
    nodes: Vec<f64>,
    cdf: Vec<f64>,
}

impl LineCdf {
    pub fn new(rho: &GridDensity) -> Result<Self> {
        check_line(rho)?;
        let nodes = rho.grid().line_nodes();
        let q = rho.lebesgue_density();
        let mut cdf = Vec::with_capacity(q.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..q.len() {
            acc += 0.5 * (nodes[i] - nodes[i - 1]) * (q[i] + q[i - 1]);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(LabError::DegenerateCdf("zero total mass".into()));
        }
        cdf.iter_mut().for_each(|v| *v /= acc);
        Ok(Self { nodes, cdf })
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `F^{-1}(u)` by linear interpolation inside the first cell whose upper CDF
    /// value exceeds `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&v| v <= u);
        if j == 0 {
            return self.nodes[0];
        }
        if j >= self.cdf.len() {
            return *self.nodes.last().expect("nonempty");
        }
        let (f0, f1) = (self.cdf[j - 1], self.cdf[j]);
        let (x0, x1) = (self.nodes[j - 1], self.nodes[j]);
        x0 + (x1 - x0) * (u - f0) / (f1 - f0)
    }

    /// `F(x)` by linear interpolation, clamped to `[0, 1]` outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[n - 1] {
            return 1.0;
        }
        let j = self.nodes.partition_point(|&v| v <= x);
        let (x0, x1) = (self.nodes[j - 1], self.nodes[j]);
        self.cdf[j - 1] + (self.cdf[j] - self.cdf[j - 1]) * (x - x0) / (x1 - x0)
    }
}

/// `W_p` between two 1-D densities by quantile inversion on
/// [`QUANTILE_POINTS`] midpoint levels.
pub fn wasserstein_1d(mu: &GridDensity, nu: &GridDensity, p: Exponent) -> Result<f64> {
    let (fm, fn_) = (LineCdf::new(mu)?, LineCdf::new(nu)?);
    let n = QUANTILE_POINTS;
    let diffs = (0..n).map(|j| {
        let u = (j as f64 + 0.5) / n as f64;
        (fm.quantile(u) - fn_.quantile(u)).abs()
    });
    Ok(match p {
        Exponent::Infinity => diffs.fold(0.0, f64::max),
        Exponent::Finite(p) => (diffs.map(|d| d.powf(p)).sum::<f64>() / n as f64).powf(1.0 / p),
    })
}

/// `W_p` between the atomic measures carried by the grid nodes, by merging
/// the two step CDFs exactly. This is the quantile formula for the discrete
/// problem solved by [`discrete_ot`].
pub fn wasserstein_1d_atomic(mu: &GridDensity, nu: &GridDensity, p: Exponent) -> Result<f64> {
    check_line(mu)?;
    check_line(nu)?;
    let (xa, ma) = (mu.grid().line_nodes(), normalized(mu.masses()));
    let (xb, mb) = (nu.grid().line_nodes(), normalized(nu.masses()));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (ma[0], mb[0]);
    let mut acc = 0.0f64;
    loop {
        let step = ra.min(rb);
        if step > 0.0 {
            let d = (xa[i] - xb[j]).abs();
            acc = match p {
                Exponent::Infinity => acc.max(d),
                Exponent::Finite(p) => acc + step * d.powf(p),
            };
        }
        ra -= step;
        rb -= step;
        if ra <= 0.0 {
            i += 1;
            if i == xa.len() {
                break;
            }
            ra = ma[i];
        }
        if rb <= 0.0 {
            j += 1;
            if j == xb.len() {
                break;
            }
            rb = mb[j];
        }
    }
    Ok(match p {
        Exponent::Infinity => acc,
        Exponent::Finite(p) => acc.powf(1.0 / p),
    })
}

fn normalized(mut m: Vec<f64>) -> Vec<f64> {
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= total);
    m
}

/// `W_1 = int |F_mu - F_nu| dx` on a shared axis.
pub fn w1_by_cdf(mu: &GridDensity, nu: &GridDensity) -> Result<f64> {
    if mu.grid() != nu.grid() {
        return Err(invalid("nu", "CDF form of W_1 needs a shared grid"));
    }
    let (fm, fn_) = (LineCdf::new(mu)?, LineCdf::new(nu)?);
    let x = fm.nodes();
    Ok((1..x.len())
        .map(|i| {
            let (a, b) = (
                fm.values()[i - 1] - fn_.values()[i - 1],
                fm.values()[i] - fn_.values()[i],
            );
            let h = x[i] - x[i - 1];
            if a * b >= 0.0 {
                0.5 * h * (a.abs() + b.abs())
            } else {
                // the difference crosses zero inside the cell
                0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
            }
        })
        .sum())
}

/// Discrete coupling between the nodes of two grid densities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub source: GridDensity,
    pub target: GridDensity,
    /// Row-major `source.len() x target.len()`.
    pub coupling: Vec<f64>,
    pub p: f64,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.source.grid().len()
    }

    pub fn cols(&self) -> usize {
        self.target.grid().len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.cols() + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling
            .chunks(self.cols())
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols()];
        for r in self.coupling.chunks(self.cols()) {
            s.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
        s
    }

    pub fn total_mass(&self) -> f64 {
        self.coupling.iter().sum()
    }

    /// Largest deviation of the marginals from the prescribed masses.
    pub fn marginal_error(&self) -> f64 {
        let rows = self.row_sums();
        let cols = self.col_sums();
        let src = self.source.masses();
        let tgt = self.target.masses();
        rows.iter()
            .zip(&src)
            .chain(cols.iter().zip(&tgt))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the support is monotone (1-D): no crossing pairs `i < i'`, `j > j'`.
    pub fn is_monotone(&self, threshold: f64) -> bool {
        let mut max_col_so_far = 0usize;
        for i in 0..self.rows() {
            let cols: Vec<usize> = (0..self.cols())
                .filter(|&j| self.get(i, j) > threshold)
                .collect();
            if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
                if first < max_col_so_far {
                    return false;
                }
                max_col_so_far = last;
            }
        }
        true
    }

    /// Whether the plan is supported on the diagonal of identical grids.
    pub fn is_diagonal(&self, threshold: f64) -> bool {
        (0..self.rows()).all(|i| (0..self.cols()).all(|j| i == j || self.get(i, j) <= threshold))
    }
}

/// Exact optimal coupling for the cost `d(x, y)^p` between node masses, by
/// successive shortest paths with Dijkstra on reduced costs.
pub fn discrete_ot(mu: &GridDensity, nu: &GridDensity, p: f64) -> Result<(f64, TransportPlan)> {
    let (n, m) = (mu.grid().len(), nu.grid().len());
    for size in [n, m] {
        if size > LP_NODE_LIMIT {
            return Err(LabError::TooLarge {
                nodes: size,
                limit: LP_NODE_LIMIT,
            });
        }
    }
    check_dim(mu.grid().dim(), nu.grid().dim())?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p", "cost exponent must lie in [1, inf)"));
    }
    mu.ensure_normalized()?;
    nu.ensure_normalized()?;
    let xs = mu.grid().nodes();
    let ys = nu.grid().nodes();
    let cost: Vec<f64> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| euclidean_distance(x, y).powf(p)))
        .collect();
    let supply = normalized(mu.masses());
    let demand = normalized(nu.masses());
    let flow = min_cost_flow(n, m, &cost, supply, demand);
    let total = flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
    Ok((
        total,
        TransportPlan {
            source: mu.clone(),
            target: nu.clone(),
            coupling: flow,
            p,
        },
    ))
}

fn min_cost_flow(
    n: usize,
    m: usize,
    cost: &[f64],
    mut supply: Vec<f64>,
    mut demand: Vec<f64>,
) -> Vec<f64> {
    let mut flow = vec![0.0; n * m];
    // potentials: rows 0..n, columns n..n+m
    let mut pot = vec![0.0; n + m];
    for j in 0..m {
        pot[n + j] = (0..n)
            .map(|i| cost[i * m + j])
            .fold(f64::INFINITY, f64::min);
    }
    let mut dist = vec![0.0; n + m];
    let mut prev = vec![usize::MAX; n + m];
    let mut done = vec![false; n + m];
    loop {
        if supply.iter().all(|&s| s <= FLOW_EPS) || demand.iter().all(|&d| d <= FLOW_EPS) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if supply[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n + m {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                for j in 0..m {
                    let v = n + j;
                    let nd = dist[u] + (cost[u * m + j] + pot[u] - pot[v]).max(0.0);
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if flow[i * m + j] > FLOW_EPS {
                        let nd = dist[u] + (-cost[i * m + j] + pot[u] - pot[i]).max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            prev[i] = u;
                        }
                    }
                }
            }
        }
        let sink = (0..m)
            .filter(|&j| demand[j] > FLOW_EPS)
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]).then(a.cmp(&b)));
        let Some(sink) = sink else { break };
        let reach = dist[n + sink];
        if !reach.is_finite() {
            break;
        }
        for v in 0..n + m {
            pot[v] += dist[v].min(reach);
        }
        // walk back to find the bottleneck
        let mut bottleneck = demand[sink];
        let mut v = n + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= n {
                bottleneck = bottleneck.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        bottleneck = bottleneck.min(supply[v]);
        let source = v;
        let mut v = n + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < n {
                flow[u * m + (v - n)] += bottleneck;
            } else {
                flow[v * m + (u - n)] -= bottleneck;
            }
            v = u;
        }
        supply[source] -= bottleneck;
        demand[sink] -= bottleneck;
    }
    flow
}

/// `W_2` between `p_t(x, .) m` and `p_t(y, .) m` on a product of lines, as the
/// root-sum-square of per-factor quantile distances.
pub fn product_w2(space: &WeightedSpace, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    product_wp(space, x, y, t, Exponent::Finite(2.0), 2049)
}

/// Per-factor quantile distances combined as an `l^2` sum (exact for `p = 2`;
/// on a single line this is plain `W_p`).
pub fn product_wp(
    space: &WeightedSpace,
    x: &[f64],
    y: &[f64],
    t: f64,
    p: Exponent,
    n: usize,
) -> Result<f64> {
    check_dim(space.dim(), x.len())?;
    check_dim(space.dim(), y.len())?;
    let mut sq = 0.0;
    for (d, &line) in space.factors().iter().enumerate() {
        if x[d] == y[d] {
            continue;
        }
        let spec = KernelSpec::new(line, t)?;
        let grid = Grid::new(vec![kernel_axis(&spec, &[x[d], y[d]], DEFAULT_SIGMAS, n)?])?;
        let w = wasserstein_1d(
            &kernel_measure(&spec, x[d], &grid)?,
            &kernel_measure(&spec, y[d], &grid)?,
            p,
        )?;
        sq += w * w;
    }
    Ok(sq.sqrt())
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "p",
            format!("c-transforms need p in (1, inf), got {p}"),
        ))
    }
}

fn cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    euclidean_distance(x, y).powf(p) / p
}

/// `phi^c(y) = min_x ( d(x,y)^p / p - phi(x) )` on the nodes of `target`.
pub fn c_transform_onto(phi: &PotentialField, target: &Grid, p: f64) -> Result<PotentialField> {
    check_exponent(p)?;
    check_dim(phi.grid().dim(), target.dim())?;
    let xs = phi.grid().nodes();
    let values = target
        .nodes()
        .iter()
        .map(|y| inf_scan(&xs, phi.values(), y, |x, y| cost(x, y, p), -1.0))
        .collect();
    Ok(PotentialField::new(target.clone(), values)?.with_exponent(p))
}

/// `min_x (c(x, y) + sign * v(x))`, first minimizer on ties.
fn inf_scan<C: Fn(&[f64], &[f64]) -> f64>(
    xs: &[Vec<f64>],
    v: &[f64],
    y: &[f64],
    c: C,
    sign: f64,
) -> f64 {
    xs.iter()
        .zip(v)
        .map(|(x, &vx)| c(x, y) + sign * vx)
        .fold(f64::INFINITY, f64::min)
}

pub fn c_transform(phi: &PotentialField, p: f64) -> Result<PotentialField> {
    c_transform_onto(phi, phi.grid(), p)
}

/// Hopf-Lax semigroup with `L(s) = s^p / p`:
/// `Q_a phi(x) = min_y ( phi(y) + d(x,y)^p / (p a^{p-1}) )`.
pub fn hopf_lax(phi: &PotentialField, a: f64, p: f64) -> Result<PotentialField> {
    hopf_lax_onto(phi, phi.grid(), a, p)
}

pub fn hopf_lax_onto(
    phi: &PotentialField,
    target: &Grid,
    a: f64,
    p: f64,
) -> Result<PotentialField> {
    check_exponent(p)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(
            "a",
            format!("Hopf-Lax time must be positive, got {a}"),
        ));
    }
    check_dim(phi.grid().dim(), target.dim())?;
    let scale = a.powf(p - 1.0);
    let ys = phi.grid().nodes();
    let values = target
        .nodes()
        .iter()
        .map(|x| inf_scan(&ys, phi.values(), x, |y, x| cost(x, y, p) / scale, 1.0))
        .collect();
    Ok(PotentialField::new(target.clone(), values)?.with_exponent(p))
}

/// `phi^a = Q_{1-a}(-phi^c)`.
pub fn intermediate_potential(phi_c: &PotentialField, a: f64, p: f64) -> Result<PotentialField> {
    intermediate_potential_onto(phi_c, phi_c.grid(), a, p)
}

pub fn intermediate_potential_onto(
    phi_c: &PotentialField,
    target: &Grid,
    a: f64,
    p: f64,
) -> Result<PotentialField> {
    if !(0.0..1.0).contains(&a) {
        return Err(invalid(
            "a",
            format!("interpolation time must lie in [0, 1), got {a}"),
        ));
    }
    hopf_lax_onto(&phi_c.scaled(-1.0)?, target, 1.0 - a, p)
}

/// `W_p^p / p - int phi dmu - int phi^c dnu` in 1-D, with `phi` on the grid of `mu`.
pub fn duality_gap(
    mu: &GridDensity,
    nu: &GridDensity,
    phi: &PotentialField,
    p: f64,
) -> Result<f64> {
    check_exponent(p)?;
    if phi.grid() != mu.grid() {
        return Err(invalid("phi", "potential must live on the source grid"));
    }
    let w = wasserstein_1d(mu, nu, Exponent::Finite(p))?;
    let phi_c = c_transform_onto(phi, nu.grid(), p)?;
    Ok(w.powf(p) / p - dual_value(mu, nu, phi, &phi_c))
}

/// `int phi dmu + int psi dnu`.
pub fn dual_value(
    mu: &GridDensity,
    nu: &GridDensity,
    phi: &PotentialField,
    psi: &PotentialField,
) -> f64 {
    let a: f64 = mu
        .masses()
        .iter()
        .zip(phi.values())
        .map(|(m, v)| m * v)
        .sum();
    let b: f64 = nu
        .masses()
        .iter()
        .zip(psi.values())
        .map(|(m, v)| m * v)
        .sum();
    a + b
}

/// Quantile levels excluded from the monotone map as numerically flat tails.
const MAP_TAIL: f64 = 1e-10;

/// The monotone map `T = F_nu^{-1} o F_mu` at the nodes of `mu`, with the mask of
/// nodes where it is resolved.
pub fn monotone_map(mu: &GridDensity, nu: &GridDensity) -> Result<(Vec<f64>, Vec<bool>)> {
    let (fm, fn_) = (LineCdf::new(mu)?, LineCdf::new(nu)?);
    let q = mu.lebesgue_density();
    let mut map = Vec::with_capacity(q.len());
    let mut mask = Vec::with_capacity(q.len());
    for (i, &u) in fm.values().iter().enumerate() {
        let ok = u > MAP_TAIL && u < 1.0 - MAP_TAIL;
        if ok && q[i] <= 0.0 {
            return Err(LabError::DegenerateCdf(format!(
                "source density vanishes at interior node {i} (x = {})",
                fm.nodes()[i]
            )));
        }
        map.push(fn_.quantile(u));
        mask.push(ok);
    }
    if !mask.iter().any(|&b| b) {
        return Err(LabError::DegenerateCdf(
            "no node strictly inside the support".into(),
        ));
    }
    Ok((map, mask))
}

/// Kantorovich potential on the grid of `mu` recovered from the monotone map:
/// `phi'(x) = sign(x - T x) |x - T x|^{p-1}`, integrated by the trapezoid rule and
/// normalized to zero at the centre node. Slopes are held constant beyond the
/// resolved quantile range. The certified Lipschitz bound is the largest slope.
pub fn potential_from_monotone_map(
    mu: &GridDensity,
    nu: &GridDensity,
    p: f64,
) -> Result<PotentialField> {
    check_exponent(p)?;
    let (map, mask) = monotone_map(mu, nu)?;
    let x = mu.grid().line_nodes();
    let mut slope: Vec<Option<f64>> = x
        .iter()
        .zip(&map)
        .zip(&mask)
        .map(|((&xi, &ti), &ok)| ok.then(|| (xi - ti).signum() * (xi - ti).abs().powf(p - 1.0)))
        .collect();
    let first = slope
        .iter()
        .position(Option::is_some)
        .expect("mask nonempty");
    let last = slope
        .iter()
        .rposition(Option::is_some)
        .expect("mask nonempty");
    let (lo, hi) = (slope[first], slope[last]);
    slope[..first].iter_mut().for_each(|s| *s = lo);
    slope[last + 1..].iter_mut().for_each(|s| *s = hi);
    // interior gaps cannot occur: the resolved levels form an interval
    let slope: Vec<f64> = slope.into_iter().map(|s| s.expect("filled")).collect();
    let mut values = Vec::with_capacity(x.len());
    values.push(0.0);
    for i in 1..x.len() {
        values.push(values[i - 1] + 0.5 * (x[i] - x[i - 1]) * (slope[i] + slope[i - 1]));
    }
    let bound = slope.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    PotentialField::new(mu.grid().clone(), values)?
        .with_exponent(p)
        .normalized_at_center()?
        .certify_lipschitz(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::WeightedLine;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lebesgue() -> WeightedSpace {
        WeightedSpace::line(WeightedLine::lebesgue())
    }

    fn gaussian(grid: &Grid, mean: f64, var: f64) -> GridDensity {
        GridDensity::from_lebesgue_log_density(&lebesgue(), grid, |x| {
            -(x[0] - mean).powi(2) / (2.0 * var)
        })
        .unwrap()
    }

    fn atoms(grid: &Grid, masses: &[f64]) -> GridDensity {
        let w = grid.trapezoid_weights();
        let vals: Vec<f64> = masses.iter().zip(&w).map(|(m, w)| m / w).collect();
        GridDensity::from_values(&lebesgue(), grid, &vals).unwrap()
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Finite(2.0));
        assert_eq!("INF".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert!("0.5".parse::<Exponent>().is_err());
        assert!("x".parse::<Exponent>().is_err());
        let json = serde_json::to_string(&vec![Exponent::Finite(1.0), Exponent::Infinity]).unwrap();
        assert_eq!(json, r#"[1.0,"inf"]"#);
        let back: Vec<Exponent> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Exponent::Finite(1.0), Exponent::Infinity]);
    }

    #[test]
    fn identical_measures_have_zero_distance() {
        let grid = Grid::line(-8.0, 8.0, 1025).unwrap();
        let g = gaussian(&grid, 0.3, 1.0);
        for p in [
            Exponent::Finite(1.0),
            Exponent::Finite(2.0),
            Exponent::Infinity,
        ] {
            assert_eq!(wasserstein_1d(&g, &g, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn near_dirac_masses() {
        let grid = Grid::line(-2.0, 5.0, 4097).unwrap();
        let h = grid.spacing(0);
        let a = gaussian(&grid, 0.0, 25.0 * h * h);
        let b = gaussian(&grid, 3.0, 25.0 * h * h);
        for p in [
            Exponent::Finite(1.0),
            Exponent::Finite(2.0),
            Exponent::Finite(3.5),
            Exponent::Infinity,
        ] {
            let w = wasserstein_1d(&a, &b, p).unwrap();
            assert!((w - 3.0).abs() < 1e-3, "p={p} w={w}");
        }
    }

    #[test]
    fn gaussian_translation_closed_form() {
        let grid = Grid::line(-9.0, 11.0, 2049).unwrap();
        let (a, b) = (gaussian(&grid, 0.0, 1.0), gaussian(&grid, 1.7, 1.0));
        let w = wasserstein_1d(&a, &b, Exponent::Finite(2.0)).unwrap();
        assert!((w - 1.7).abs() < 1e-4);
        // different variances: W2^2 = dmean^2 + dstd^2
        let c = gaussian(&grid, 1.0, 2.25);
        let w = wasserstein_1d(&a, &c, Exponent::Finite(2.0)).unwrap();
        assert!((w - (1.0f64 + 0.25).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn grids_may_differ_but_dimensions_may_not() {
        let g = gaussian(&Grid::line(-8.0, 8.0, 401).unwrap(), 0.0, 1.0);
        let coarse = gaussian(&Grid::line(-9.0, 7.0, 257).unwrap(), 0.0, 1.0);
        assert!(wasserstein_1d(&g, &coarse, Exponent::Finite(2.0)).unwrap() < 1e-3);
        let plane = WeightedSpace::isotropic(2, 0.0).unwrap();
        let grid2 = Grid::new(vec![*Grid::line(-1.0, 1.0, 5).unwrap().axis(0); 2]).unwrap();
        let g2 = GridDensity::from_values(&plane, &grid2, &[1.0; 25]).unwrap();
        assert!(matches!(
            wasserstein_1d(&g, &g2, Exponent::Finite(2.0)),
            Err(LabError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_point_lp_example() {
        let grid = Grid::line(0.0, 3.0, 4).unwrap();
        let mu = atoms(&grid, &[0.5, 0.5, 0.0, 0.0]);
        let nu = atoms(&grid, &[0.0, 0.0, 0.5, 0.5]);
        let (cost, plan) = discrete_ot(&mu, &nu, 2.0).unwrap();
        assert!((cost - 4.0).abs() < 1e-12);
        assert!((plan.get(0, 2) - 0.5).abs() < 1e-12 && (plan.get(1, 3) - 0.5).abs() < 1e-12);
        assert!(plan.is_monotone(1e-14));
        let (cost, plan) = discrete_ot(&mu, &mu, 2.0).unwrap();
        assert!(cost.abs() < 1e-15);
        assert!(plan.is_diagonal(1e-14));
    }

    #[test]
    fn lp_rejects_large_instances() {
        let grid = Grid::line(-5.0, 5.0, 300).unwrap();
        let g = gaussian(&grid, 0.0, 1.0);
        assert!(matches!(
            discrete_ot(&g, &g, 2.0),
            Err(LabError::TooLarge { .. })
        ));
    }

    /// Brute-force oracle: every permutation plan between uniform atoms.
    #[test]
    fn lp_matches_assignment_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = Grid::line(0.0, 1.0, 2).unwrap();
        let space = WeightedSpace::isotropic(2, 0.0).unwrap();
        let g2 = Grid::new(vec![
            *grid.axis(0),
            *Grid::line(0.0, 2.0, 3).unwrap().axis(0),
        ])
        .unwrap();
        for _ in 0..10 {
            let a: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..1.0)).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..1.0)).collect();
            let mu = GridDensity::from_values(&space, &g2, &a).unwrap();
            let nu = GridDensity::from_values(&space, &g2, &b).unwrap();
            let (cost, plan) = discrete_ot(&mu, &nu, 2.0).unwrap();
            assert!(plan.marginal_error() < 1e-12);
            assert!((plan.total_mass() - 1.0).abs() < 1e-12);
            // any feasible plan costs at least the optimum; the product plan is one
            let (ma, mb) = (mu.masses(), nu.masses());
            let nodes = g2.nodes();
            let product: f64 = (0..6)
                .flat_map(|i| (0..6).map(move |j| (i, j)))
                .map(|(i, j)| ma[i] * mb[j] * euclidean_distance(&nodes[i], &nodes[j]).powi(2))
                .sum();
            assert!(cost <= product + 1e-12);
        }
    }

    #[test]
    fn lp_matches_atomic_quantile_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let ga = Grid::line(rng.gen_range(-3.0..0.0), rng.gen_range(0.5..3.0), 64).unwrap();
            let gb = Grid::line(rng.gen_range(-3.0..0.0), rng.gen_range(0.5..3.0), 48).unwrap();
            let a: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..48).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mu = GridDensity::from_values(&lebesgue(), &ga, &a).unwrap();
            let nu = GridDensity::from_values(&lebesgue(), &gb, &b).unwrap();
            for p in [1.0, 2.0, 3.0] {
                let (cost, plan) = discrete_ot(&mu, &nu, p).unwrap();
                let q = wasserstein_1d_atomic(&mu, &nu, Exponent::Finite(p)).unwrap();
                assert!((cost.powf(1.0 / p) - q).abs() < 1e-6, "p={p}");
                assert!(plan.marginal_error() < 1e-8);
                if p > 1.0 {
                    assert!(plan.is_monotone(1e-12));
                }
            }
        }
    }

    #[test]
    fn w1_cdf_identity() {
        let grid = Grid::line(-8.0, 10.0, 2049).unwrap();
        let (a, b) = (gaussian(&grid, 0.0, 1.0), gaussian(&grid, 1.5, 2.0));
        let q = wasserstein_1d(&a, &b, Exponent::Finite(1.0)).unwrap();
        let c = w1_by_cdf(&a, &b).unwrap();
        assert!((q - c).abs() < 1e-5, "{q} vs {c}");
    }

    #[test]
    fn product_w2_examples() {
        let plane = WeightedSpace::isotropic(2, 0.0).unwrap();
        assert_eq!(
            product_w2(&plane, &[1.0, 1.0], &[1.0, 1.0], 0.5).unwrap(),
            0.0
        );
        let w = product_w2(&plane, &[0.0, 0.0], &[3.0, 4.0], 0.7).unwrap();
        assert!((w - 5.0).abs() < 1e-4);
        for k in [-2.0, 1.0] {
            let s = WeightedSpace::isotropic(2, k).unwrap();
            let t = 0.3;
            let w = product_w2(&s, &[0.0, 0.5], &[1.0, -0.5], t).unwrap();
            let expected = (-k * t).exp() * 2f64.sqrt();
            assert!((w / expected - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn c_transform_examples() {
        let grid = Grid::line(-6.0, 6.0, 1201).unwrap();
        let zero = PotentialField::constant(&grid, 0.0).unwrap();
        assert!(c_transform(&zero, 2.0)
            .unwrap()
            .values()
            .iter()
            .all(|v| v.abs() < 1e-15));
        let c = 0.8;
        let phi = PotentialField::from_fn(&grid, |x| -c * x[0]).unwrap();
        let phic = c_transform(&phi, 2.0).unwrap();
        for (y, v) in grid.line_nodes().iter().zip(phic.values()) {
            if y.abs() < 4.0 {
                assert!((v - (c * y - c * c / 2.0)).abs() < 1e-12);
            }
        }
        assert!(c_transform(&phi, 1.0).is_err());
    }

    #[test]
    fn c_transform_order_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = Grid::line(-2.0, 2.0, 81).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let phi = PotentialField::new(
                grid.clone(),
                (0..81).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let c1 = c_transform(&phi, p).unwrap();
            let c2 = c_transform(&c1, p).unwrap();
            let c3 = c_transform(&c2, p).unwrap();
            for i in 0..81 {
                assert!(c2.values()[i] >= phi.values()[i] - 1e-12);
                assert!((c3.values()[i] - c1.values()[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hopf_lax_examples() {
        let grid = Grid::line(-10.0, 10.0, 2001).unwrap();
        let id = PotentialField::from_fn(&grid, |x| x[0]).unwrap();
        for a in [0.3, 1.0, 2.0] {
            let q = hopf_lax(&id, a, 2.0).unwrap();
            for (x, v) in grid.line_nodes().iter().zip(q.values()) {
                if x.abs() < 6.0 {
                    assert!((v - (x - a / 2.0)).abs() < 1e-12);
                }
            }
            assert!(q.values().iter().zip(id.values()).all(|(q, f)| q <= f));
        }
        let c = PotentialField::constant(&grid, 2.5).unwrap();
        assert!(hopf_lax(&c, 0.7, 2.0)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 2.5));
        assert!(hopf_lax(&id, 0.0, 2.0).is_err());
    }

    #[test]
    fn hopf_lax_semigroup_and_order() {
        let grid = Grid::line(-4.0, 4.0, 401).unwrap();
        let h = grid.spacing(0);
        let phi = PotentialField::from_fn(&grid, |x| (2.0 * x[0]).sin() + 0.3 * x[0]).unwrap();
        let lip = phi.lipschitz_constant();
        let (a, b) = (0.4, 0.7);
        let direct = hopf_lax(&phi, a + b, 2.0).unwrap();
        let twice = hopf_lax(&hopf_lax(&phi, b, 2.0).unwrap(), a, 2.0).unwrap();
        for i in 0..grid.len() {
            if grid.is_interior(i) {
                assert!((direct.values()[i] - twice.values()[i]).abs() <= 2.0 * h * lip);
            }
        }
        let psi = phi.map(|v| v + 0.1 * v.abs()).unwrap();
        let (qp, qs) = (
            hopf_lax(&phi, a, 2.0).unwrap(),
            hopf_lax(&psi, a, 2.0).unwrap(),
        );
        assert!(qp.values().iter().zip(qs.values()).all(|(x, y)| x <= y));
    }

    fn translation_pair(c: f64) -> (GridDensity, GridDensity) {
        let grid = Grid::line(-9.0, 9.0 + c, 2049).unwrap();
        (gaussian(&grid, 0.0, 1.0), gaussian(&grid, c, 1.0))
    }

    #[test]
    fn duality_gap_examples() {
        let c = 1.2;
        let (mu, nu) = translation_pair(c);
        let zero = PotentialField::constant(mu.grid(), 0.0).unwrap();
        assert!(duality_gap(&mu, &mu, &zero, 2.0).unwrap().abs() < 1e-9);
        let phi = PotentialField::from_fn(mu.grid(), |x| -c * x[0]).unwrap();
        let gap = duality_gap(&mu, &nu, &phi, 2.0).unwrap();
        assert!(gap.abs() < 1e-4, "gap {gap}");
        let bad = PotentialField::from_fn(mu.grid(), |x| x[0] * x[0]).unwrap();
        assert!(duality_gap(&mu, &nu, &bad, 2.0).unwrap() > 0.1);
    }

    #[test]
    fn monotone_map_potentials() {
        let c = 1.2;
        let (mu, nu) = translation_pair(c);
        let same = potential_from_monotone_map(&mu, &mu, 2.0).unwrap();
        assert!(same.is_constant(1e-8));
        let phi = potential_from_monotone_map(&mu, &nu, 2.0).unwrap();
        let d = phi.derivative().unwrap();
        for s in &d[10..d.len() - 10] {
            assert!((s + c).abs() < 1e-4);
        }
        assert!((phi.lipschitz_constant() - c).abs() < 1e-3);
        assert!((phi.lipschitz_bound().unwrap() - c).abs() < 1e-3);
        assert!(duality_gap(&mu, &nu, &phi, 2.0).unwrap().abs() < 1e-4);
        for p in [1.5, 3.0] {
            let phi = potential_from_monotone_map(&mu, &nu, p).unwrap();
            assert!(
                duality_gap(&mu, &nu, &phi, p).unwrap().abs() < 1e-4,
                "p={p}"
            );
        }
    }

    #[test]
    fn heat_kernel_potentials_have_the_contraction_slope() {
        for &(k, t) in &[(-2.0, 0.3), (0.0, 0.5), (1.0, 1.0)] {
            let (x, y) = (0.0, 1.0);
            let spec = KernelSpec::new(WeightedLine::new(k, 0.0), t).unwrap();
            let grid = Grid::new(vec![kernel_axis(&spec, &[x, y], 8.0, 2049).unwrap()]).unwrap();
            let (mu, nu) = (
                kernel_measure(&spec, x, &grid).unwrap(),
                kernel_measure(&spec, y, &grid).unwrap(),
            );
            let phi = potential_from_monotone_map(&mu, &nu, 2.0).unwrap();
            let expected = (-k * t).exp() * (y - x);
            assert!((phi.lipschitz_constant() - expected).abs() < 1e-3, "k={k}");
            let w_inf = wasserstein_1d(&mu, &nu, Exponent::Infinity).unwrap();
            assert!((w_inf - expected).abs() < 1e-4);
        }
    }

    #[test]
    fn degenerate_cdf_is_rejected() {
        let grid = Grid::line(0.0, 4.0, 5).unwrap();
        let mu = atoms(&grid, &[0.25, 0.25, 0.0, 0.25, 0.25]);
        assert!(matches!(
            potential_from_monotone_map(&mu, &mu, 2.0),
            Err(LabError::DegenerateCdf(_))
        ));
    }

    #[test]
    fn intermediate_potentials_of_a_translation() {
        let c = 1.2;
        let (mu, nu) = translation_pair(c);
        let phi = PotentialField::from_fn(mu.grid(), |x| -c * x[0]).unwrap();
        let phic = c_transform_onto(&phi, nu.grid(), 2.0).unwrap();
        let at0 = intermediate_potential_onto(&phic, mu.grid(), 0.0, 2.0).unwrap();
        for (x, v) in mu.grid().line_nodes().iter().zip(at0.values()) {
            if x.abs() < 5.0 {
                assert!((v + c * x).abs() < 1e-4);
            }
        }
        let nodes = mu.grid().line_nodes();
        for a in [0.25, 0.5, 0.75] {
            let phia = intermediate_potential_onto(&phic, mu.grid(), a, 2.0).unwrap();
            for (x, v) in nodes.iter().zip(phia.values()) {
                if x.abs() < 5.0 {
                    assert!((v - (-c * x + c * c * a / 2.0)).abs() < 1e-4, "a={a} x={x}");
                }
            }
            // the rescaled potential is optimal from mu^a to mu^1
            let mua = gaussian(mu.grid(), a * c, 1.0);
            let scaled = phia.scaled(1.0 - a).unwrap();
            assert!(duality_gap(&mua, &nu, &scaled, 2.0).unwrap().abs() < 1e-4);
            // reversed curve: the backward potential at 1 - a is -phi^a
            // (the backward pair is (phi^c, phi))
            let back = intermediate_potential_onto(&phi, mu.grid(), 1.0 - a, 2.0).unwrap();
            for ((x, b), f) in nodes.iter().zip(back.values()).zip(phia.values()) {
                if (x - a * c).abs() < 4.0 {
                    assert!((b + f).abs() < 1e-4);
                }
            }
        }
        assert!(intermediate_potential(&phic, 1.0, 2.0).is_err());
    }

    #[test]
    fn hamilton_jacobi_residual_is_first_order() {
        let c = 0.9;
        for n in [201, 401, 801] {
            let grid = Grid::line(-6.0, 6.0, n).unwrap();
            let h = grid.spacing(0);
            let phi = PotentialField::from_fn(&grid, |x| -c * x[0]).unwrap();
            let phic = c_transform(&phi, 2.0).unwrap();
            let (a, da) = (0.5, 4.0 * h);
            let f0 = intermediate_potential(&phic, a - da, 2.0).unwrap();
            let f1 = intermediate_potential(&phic, a + da, 2.0).unwrap();
            let fa = intermediate_potential(&phic, a, 2.0).unwrap();
            let grad = fa.derivative().unwrap();
            let nodes = grid.line_nodes();
            let residual = (0..n)
                .filter(|&i| nodes[i].abs() < 3.0)
                .map(|i| {
                    ((f1.values()[i] - f0.values()[i]) / (2.0 * da) - 0.5 * grad[i] * grad[i]).abs()
                })
                .fold(0.0, f64::max);
            assert!(residual <= h + da, "n={n} residual={residual}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn triangle_inequality(m in proptest::collection::vec(-2.0f64..2.0, 3), v in proptest::collection::vec(0.2f64..2.0, 3),
                               p in 1.0f64..4.0) {
            let grid = Grid::line(-14.0, 14.0, 1025).unwrap();
            let g: Vec<GridDensity> = (0..3).map(|i| gaussian(&grid, m[i], v[i])).collect();
            for p in [Exponent::Finite(p), Exponent::Infinity] {
                let ab = wasserstein_1d(&g[0], &g[1], p).unwrap();
                let bc = wasserstein_1d(&g[1], &g[2], p).unwrap();
                let ac = wasserstein_1d(&g[0], &g[2], p).unwrap();
                proptest::prop_assert!(ac <= ab + bc + 1e-9);
            }
        }

        #[test]
        fn lp_plans_are_feasible(a in proptest::collection::vec(0.0f64..1.0, 12), b in proptest::collection::vec(0.01f64..1.0, 9)) {
            proptest::prop_assume!(a.iter().sum::<f64>() > 0.1);
            let mu = GridDensity::from_values(&lebesgue(), &Grid::line(0.0, 1.0, 12).unwrap(), &a).unwrap();
            let nu = GridDensity::from_values(&lebesgue(), &Grid::line(-0.5, 2.0, 9).unwrap(), &b).unwrap();
            let (cost, plan) = discrete_ot(&mu, &nu, 2.0).unwrap();
            proptest::prop_assert!(plan.marginal_error() < 1e-8);
            proptest::prop_assert!(plan.coupling.iter().all(|&v| v >= -1e-15));
            let q = wasserstein_1d_atomic(&mu, &nu, Exponent::Finite(2.0)).unwrap();
            proptest::prop_assert!((cost.sqrt() - q).abs() < 1e-6);
        }
    }
}
