//! Weighted Euclidean model spaces, uniform tensor grids and densities on them.
//!
//! A [`WeightedLine`] is `(R, |.|, e^{-f} dx)` with `f(x) = k x^2 / 2 + a x`, so its
//! synthetic Ricci lower bound is exactly `k`. A [`WeightedSpace`] is a finite
//! product of such lines with the Euclidean product metric; its curvature bound
//! is the smallest factor `k`.
//!
//! Densities are stored in log form relative to the reference measure. For
//! strongly negative `k` the weight `e^{-f}` overflows long before the kernels
//! we care about have decayed, so neither the density nor the weight can be
//! held in plain floating point on a wide grid; their product can.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

/// Largest grid dimension handled by full tensor-grid operations.
pub const MAX_GRID_DIM: usize = 3;

/// Quadrature mass tolerance after normalization.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// One weighted line, weight `f(x) = k x^2 / 2 + a x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedLine {
    pub k: f64,
    pub a: f64,
}

impl WeightedLine {
    pub fn new(k: f64, a: f64) -> Self {
        Self { k, a }
    }

    /// The unweighted line.
    pub fn lebesgue() -> Self {
        Self { k: 0.0, a: 0.0 }
    }

    pub fn weight(&self, x: f64) -> f64 {
        0.5 * self.k * x * x + self.a * x
    }

    pub fn weight_derivative(&self, x: f64) -> f64 {
        self.k * x + self.a
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    /// Total mass of the reference measure, finite only for `k > 0`.
    pub fn total_mass(&self) -> Option<f64> {
        (self.k > 0.0).then(|| {
            (2.0 * std::f64::consts::PI / self.k).sqrt() * (self.a * self.a / (2.0 * self.k)).exp()
        })
    }
}

/// Product of weighted lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpace {
    factors: Vec<WeightedLine>,
}

impl WeightedSpace {
    pub fn new(factors: Vec<WeightedLine>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("factors", "a space needs at least one factor"));
        }
        if factors.iter().any(|l| !l.k.is_finite() || !l.a.is_finite()) {
            return Err(invalid("factors", "weight coefficients must be finite"));
        }
        Ok(Self { factors })
    }

    pub fn line(line: WeightedLine) -> Self {
        Self {
            factors: vec![line],
        }
    }

    /// `R^n_k`: `n` identical factors with weight `k |x|^2 / 2`.
    pub fn isotropic(n: usize, k: f64) -> Result<Self> {
        Self::new(vec![WeightedLine::new(k, 0.0); n])
    }

    pub fn factors(&self) -> &[WeightedLine] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn curvature_bound(&self) -> f64 {
        self.factors
            .iter()
            .map(|l| l.k)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn weight_at(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self
            .factors
            .iter()
            .zip(x)
            .map(|(line, &xi)| line.weight(xi))
            .sum())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(LabError::DimensionMismatch { expected, got })
    }
}

/// Point on the segment from `x` to `y` at parameter `s`.
pub fn geodesic_point(x: &[f64], y: &[f64], s: f64) -> Result<Vec<f64>> {
    check_dim(x.len(), y.len())?;
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid("s", format!("{s} is outside [0, 1]")));
    }
    Ok(x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            if s == 1.0 {
                yi
            } else {
                (1.0 - s) * xi + s * yi
            }
        })
        .collect())
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// One axis of a uniform grid; both endpoints are nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidGrid(format!(
                "axis needs at least 2 nodes, got {n}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(LabError::InvalidGrid(format!(
                "bad axis bounds [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// Axis of `n` nodes centred on `center` with the given half width.
    pub fn centered(center: f64, half_width: f64, n: usize) -> Result<Self> {
        Self::new(center - half_width, center + half_width, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.n {
            0.5 * h
        } else {
            h
        }
    }

    /// Same interval with every cell halved (`2n - 1` nodes).
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            ..*self
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Uniform tensor grid; nodes are flattened row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_GRID_DIM {
            return Err(LabError::InvalidGrid(format!(
                "grid dimension must be in 1..={MAX_GRID_DIM}, got {}",
                axes.len()
            )));
        }
        for ax in &axes {
            Axis::new(ax.lo, ax.hi, ax.n)?;
        }
        Ok(Self { axes })
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lo, hi, n)?])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.axes[axis].spacing()
    }

    /// Largest spacing over all axes.
    pub fn max_spacing(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).fold(0.0, f64::max)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for d in (0..self.dim().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.axes[d + 1].n;
        }
        strides
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            let n = self.axes[d].n;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.coordinate(i))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Node coordinates of a 1-D grid.
    pub fn line_nodes(&self) -> Vec<f64> {
        self.axes[0].nodes()
    }

    /// Tensor trapezoid weights for Lebesgue measure on the box.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|flat| {
                self.multi_index(flat)
                    .iter()
                    .zip(&self.axes)
                    .map(|(&i, ax)| ax.trapezoid_weight(i))
                    .product()
            })
            .collect()
    }

    /// Index of the node closest to the centre of the box.
    pub fn center_index(&self) -> usize {
        let idx: Vec<usize> = self.axes.iter().map(|a| (a.n - 1) / 2).collect();
        self.flat_index(&idx)
    }

    pub fn refined(&self) -> Self {
        Self {
            axes: self.axes.iter().map(Axis::refined).collect(),
        }
    }

    /// Whether a node has a neighbour on both sides along every axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .all(|(&i, ax)| i > 0 && i + 1 < ax.n)
    }
}

/// Trapezoid weights of the reference measure `e^{-f} dx` on the grid.
pub fn reference_weights(space: &WeightedSpace, grid: &Grid) -> Result<Vec<f64>> {
    check_dim(space.dim(), grid.dim())?;
    let trap = grid.trapezoid_weights();
    Ok((0..grid.len())
        .map(|i| {
            let f = space.weight_at(&grid.node(i)).expect("dimension checked");
            (-f).exp() * trap[i]
        })
        .collect())
}

/// Probability density with respect to the reference measure, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    space: WeightedSpace,
    grid: Grid,
    log_density: Vec<f64>,
    /// `-f(node)`
    log_reference: Vec<f64>,
}

impl GridDensity {
    /// Builds a density from `ln rho` (w.r.t. the reference measure) and normalizes
    /// its quadrature mass to one. `-inf` entries denote zero density.
    pub fn from_log_density(
        space: &WeightedSpace,
        grid: &Grid,
        log_density: Vec<f64>,
    ) -> Result<Self> {
        check_dim(space.dim(), grid.dim())?;
        if log_density.len() != grid.len() {
            return Err(LabError::DimensionMismatch {
                expected: grid.len(),
                got: log_density.len(),
            });
        }
        if log_density
            .iter()
            .any(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(invalid("log_density", "values must be finite or -inf"));
        }
        let log_reference = (0..grid.len())
            .map(|i| -space.weight_at(&grid.node(i)).expect("dimension checked"))
            .collect();
        let mut density = Self {
            space: space.clone(),
            grid: grid.clone(),
            log_density,
            log_reference,
        };
        let mass = density.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(LabError::NotNormalized { mass });
        }
        let shift = mass.ln();
        density.log_density.iter_mut().for_each(|v| *v -= shift);
        Ok(density)
    }

    /// Builds a density from plain values w.r.t. the reference measure.
    pub fn from_values(space: &WeightedSpace, grid: &Grid, values: &[f64]) -> Result<Self> {
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(invalid(
                "values",
                "densities must be finite and nonnegative",
            ));
        }
        Self::from_log_density(space, grid, values.iter().map(|v| v.ln()).collect())
    }

    /// Builds a density from `ln q` where `q` is a density w.r.t. Lebesgue measure.
    pub fn from_lebesgue_log_density<F>(
        space: &WeightedSpace,
        grid: &Grid,
        log_q: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        check_dim(space.dim(), grid.dim())?;
        let logd = (0..grid.len())
            .map(|i| {
                let x = grid.node(i);
                log_q(&x) + space.weight_at(&x).expect("dimension checked")
            })
            .collect();
        Self::from_log_density(space, grid, logd)
    }

    pub fn space(&self) -> &WeightedSpace {
        &self.space
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    /// `-f` at every node.
    pub fn log_reference(&self) -> &[f64] {
        &self.log_reference
    }

    /// Density values w.r.t. the reference measure (may under/overflow for extreme weights).
    pub fn values(&self) -> Vec<f64> {
        self.log_density.iter().map(|v| v.exp()).collect()
    }

    /// Density w.r.t. Lebesgue measure.
    pub fn lebesgue_density(&self) -> Vec<f64> {
        self.log_density
            .iter()
            .zip(&self.log_reference)
            .map(|(d, r)| (d + r).exp())
            .collect()
    }

    /// Quadrature mass carried by each node.
    pub fn masses(&self) -> Vec<f64> {
        self.lebesgue_density()
            .iter()
            .zip(self.grid.trapezoid_weights())
            .map(|(q, w)| q * w)
            .collect()
    }

    pub fn mass(&self) -> f64 {
        self.masses().iter().sum()
    }

    pub fn mean(&self, axis: usize) -> f64 {
        self.masses()
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.grid.node(i)[axis])
            .sum()
    }

    pub fn variance(&self, axis: usize) -> f64 {
        let mean = self.mean(axis);
        self.masses()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let d = self.grid.node(i)[axis] - mean;
                m * d * d
            })
            .sum()
    }

    /// Quadrature of `g` against the measure.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, g: F) -> f64 {
        self.masses()
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, m)| m * g(&self.grid.node(i)))
            .sum()
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() <= 1e-8 {
            Ok(())
        } else {
            Err(LabError::NotNormalized { mass })
        }
    }

    /// One-dimensional marginal along `axis`, carried on that axis alone.
    pub fn marginal(&self, axis: usize) -> Result<GridDensity> {
        let ax = *self.grid.axis(axis);
        let line_grid = Grid::new(vec![ax])?;
        let line_space = WeightedSpace::line(self.space.factors()[axis]);
        let masses = self.masses();
        let mut acc = vec![0.0; ax.n];
        for (flat, m) in masses.iter().enumerate() {
            acc[self.grid.multi_index(flat)[axis]] += m;
        }
        let line = line_space.factors()[0];
        let logd = acc
            .iter()
            .enumerate()
            .map(|(i, m)| (m / ax.trapezoid_weight(i)).ln() + line.weight(ax.coordinate(i)))
            .collect();
        GridDensity::from_log_density(&line_space, &line_grid, logd)
    }
}
