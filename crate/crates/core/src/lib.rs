//! Numerical checks of Wasserstein contraction, gradient estimates and their
//! rigidity on weighted Euclidean model spaces `R^n_k`.
//!
//! Every heat kernel on these spaces is Gaussian, so each inequality can be
//! evaluated against a closed form and an independent numerical oracle.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod functionals;
pub mod heat;
pub mod report;
pub mod rigidity;
pub mod space;
pub mod transport;

pub use error::{LabError, Result};
pub use field::{PotentialField, TestFunction};
pub use heat::{KernelMoments, KernelSpec};
pub use space::{Axis, Grid, GridDensity, WeightedLine, WeightedSpace};
