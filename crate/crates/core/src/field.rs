//! Scalar functions sampled on a grid: test functions, semigroup outputs and
//! Kantorovich potentials.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::space::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: Grid,
    values: Vec<f64>,
    exponent: f64,
    lipschitz_bound: Option<f64>,
}

impl PotentialField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "potential values must be finite"));
        }
        Ok(Self {
            grid,
            values,
            exponent: 2.0,
            lipschitz_bound: None,
        })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self::new(grid.clone(), values)
    }

    /// Constant function.
    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.len()])
    }

    /// Tags the field with the transport exponent it belongs to.
    pub fn with_exponent(mut self, p: f64) -> Self {
        self.exponent = p;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Ok(Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )?
        .with_exponent(self.exponent))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    /// Shifts values so that the node nearest the grid centre is zero.
    pub fn normalized_at_center(&self) -> Result<Self> {
        let c = self.values[self.grid.center_index()];
        self.map(|v| v - c)
    }

    /// Discrete Lipschitz constant: largest adjacent difference over spacing, all axes.
    pub fn lipschitz_constant(&self) -> f64 {
        let strides = self.grid.strides();
        let mut lip = 0.0f64;
        for flat in 0..self.grid.len() {
            let idx = self.grid.multi_index(flat);
            for (d, ax) in self.grid.axes().iter().enumerate() {
                if idx[d] + 1 < ax.n {
                    let diff = (self.values[flat + strides[d]] - self.values[flat]).abs();
                    lip = lip.max(diff / ax.spacing());
                }
            }
        }
        lip
    }

    /// Certifies a Lipschitz bound, rejecting it if the discrete constant exceeds it.
    pub fn certify_lipschitz(mut self, bound: f64) -> Result<Self> {
        let lip = self.lipschitz_constant();
        if lip > bound * (1.0 + 1e-9) + 1e-12 {
            return Err(LabError::Precondition(format!(
                "discrete Lipschitz constant {lip} exceeds the certified bound {bound}"
            )));
        }
        self.lipschitz_bound = Some(bound);
        Ok(self)
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo <= tol
    }

    /// Piecewise-linear interpolation on a 1-D grid; clamps outside the box.
    pub fn interpolate(&self, x: f64) -> f64 {
        let ax = self.grid.axis(0);
        let h = ax.spacing();
        let s = ((x - ax.lo) / h).clamp(0.0, (ax.n - 1) as f64);
        let i = (s.floor() as usize).min(ax.n - 2);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Derivative of a 1-D field: fourth-order central differences in the interior
    /// (the Richardson combination of steps `h` and `2h`), lower order near the edges.
    pub fn derivative(&self) -> Result<Vec<f64>> {
        if self.grid.dim() != 1 {
            return Err(LabError::DimensionMismatch {
                expected: 1,
                got: self.grid.dim(),
            });
        }
        Ok(derivative_1d(&self.values, self.grid.spacing(0)))
    }
}

pub(crate) fn derivative_1d(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (8.0 * (v[i + 1] - v[i - 1]) - (v[i + 2] - v[i - 2])) / (12.0 * h)
            } else if i >= 1 && i + 1 < n {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            } else if i == 0 {
                (v[1] - v[0]) / h
            } else {
                (v[n - 1] - v[n - 2]) / h
            }
        })
        .collect()
}

/// Closed-form test functions on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Identity,
    Constant {
        value: f64,
    },
    /// `sqrt(x^2 + eps^2)`
    SmoothAbs {
        eps: f64,
    },
    Sine {
        freq: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `offset + slope x + sum amp sin(freq x + phase)` over `[amp, freq, phase]` terms.
    Trig {
        offset: f64,
        slope: f64,
        terms: Vec<[f64; 3]>,
    },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Constant { value } => *value,
            Self::SmoothAbs { eps } => x.hypot(*eps),
            Self::Sine { freq } => (freq * x).sin(),
            Self::Exponential { rate } => (rate * x).exp(),
            Self::Trig {
                offset,
                slope,
                terms,
            } => {
                offset
                    + slope * x
                    + terms
                        .iter()
                        .map(|[a, w, ph]| a * (w * x + ph).sin())
                        .sum::<f64>()
            }
        }
    }

    /// Global Lipschitz constant, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Self::Identity | Self::SmoothAbs { .. } => Some(1.0),
            Self::Constant { .. } => Some(0.0),
            Self::Sine { freq } => Some(freq.abs()),
            Self::Exponential { rate } => (*rate == 0.0).then_some(0.0),
            Self::Trig { slope, terms, .. } => {
                Some(slope.abs() + terms.iter().map(|[a, w, _]| (a * w).abs()).sum::<f64>())
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.lipschitz() == Some(0.0)
    }

    /// Samples the function on a grid (1-D), certifying the Lipschitz bound when known.
    pub fn field(&self, grid: &Grid) -> Result<PotentialField> {
        if grid.dim() != 1 {
            return Err(LabError::DimensionMismatch {
                expected: 1,
                got: grid.dim(),
            });
        }
        let f = PotentialField::from_fn(grid, |x| self.eval(x[0]))?;
        match self.lipschitz() {
            Some(l) => f.certify_lipschitz(l),
            None => Ok(f),
        }
    }

    /// Random smooth Lipschitz function: three sine modes and, unless `positive`,
    /// a linear part. Positive functions stay above `1`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, positive: bool) -> Self {
        let terms: Vec<[f64; 3]> = (0..3)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.2..2.5),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ]
            })
            .collect();
        if positive {
            let amp: f64 = terms.iter().map(|t| t[0].abs()).sum();
            Self::Trig {
                offset: 1.0 + amp + rng.gen_range(0.0..1.0),
                slope: 0.0,
                terms,
            }
        } else {
            Self::Trig {
                offset: rng.gen_range(-1.0..1.0),
                slope: rng.gen_range(-1.0..1.0),
                terms,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Axis;

    #[test]
    fn lipschitz_of_affine_field() {
        let g = Grid::new(vec![
            Axis::new(-1.0, 1.0, 21).unwrap(),
            Axis::new(0.0, 2.0, 11).unwrap(),
        ])
        .unwrap();
        let f = PotentialField::from_fn(&g, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0).unwrap();
        assert!((f.lipschitz_constant() - 3.0).abs() < 1e-12);
        assert!(f.clone().certify_lipschitz(3.0).is_ok());
        assert!(f.certify_lipschitz(2.5).is_err());
    }

    #[test]
    fn derivative_is_exact_on_cubics_in_the_interior() {
        let g = Grid::line(-2.0, 2.0, 41).unwrap();
        let f = PotentialField::from_fn(&g, |x| x[0].powi(3) - x[0]).unwrap();
        let d = f.derivative().unwrap();
        let nodes = g.line_nodes();
        for i in 2..39 {
            assert!((d[i] - (3.0 * nodes[i] * nodes[i] - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_and_centering() {
        let g = Grid::line(0.0, 4.0, 5).unwrap();
        let f = PotentialField::from_fn(&g, |x| 2.0 * x[0]).unwrap();
        assert!((f.interpolate(1.25) - 2.5).abs() < 1e-14);
        assert_eq!(f.interpolate(10.0), 8.0);
        let c = f.normalized_at_center().unwrap();
        assert_eq!(c.values()[2], 0.0);
        assert!(PotentialField::new(g, vec![f64::NAN; 5]).is_err());
    }

    #[test]
    fn test_function_bounds_hold_on_grids() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = Grid::line(-6.0, 6.0, 2001).unwrap();
        for _ in 0..20 {
            let f = TestFunction::random(&mut rng, false);
            let field = f.field(&g).unwrap();
            assert!(field.lipschitz_constant() <= f.lipschitz().unwrap());
            let pos = TestFunction::random(&mut rng, true);
            assert!(pos.field(&g).unwrap().values().iter().all(|&v| v >= 1.0));
        }
        assert!(TestFunction::Constant { value: 2.0 }.is_constant());
        assert!(!TestFunction::Identity.is_constant());
        assert_eq!(TestFunction::Exponential { rate: 1.0 }.lipschitz(), None);
        let json = serde_json::to_string(&TestFunction::SmoothAbs { eps: 0.1 }).unwrap();
        assert_eq!(json, r#"{"kind":"smooth-abs","eps":0.1}"#);
    }
}
