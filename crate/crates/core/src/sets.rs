//! Feasible sets and their Euclidean projectors.

use crate::error::{Error, Result};
use crate::numkit::Vector;

/// A nonempty closed convex set supporting exact Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// { x : lo_i <= x_i <= hi_i }
    Box { lo: Vector, hi: Vector },
    /// { x : x_i >= 0 }
    NonnegativeOrthant { dim: usize },
    /// All of R^dim; projection is the identity.
    WholeSpace { dim: usize },
}

impl FeasibleSet {
    pub fn box_set(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidInput("box must have dimension >= 1".into()));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite {
                context: "box bounds".into(),
            });
        }
        for i in 0..lo.len() {
            if lo[i] > hi[i] {
                return Err(Error::InvalidInput(format!(
                    "box is empty: lo[{i}] = {} > hi[{i}] = {}",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    pub fn nonnegative_orthant(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("orthant dimension must be >= 1".into()));
        }
        Ok(FeasibleSet::NonnegativeOrthant { dim })
    }

    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("space dimension must be >= 1".into()));
        }
        Ok(FeasibleSet::WholeSpace { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::NonnegativeOrthant { dim } => *dim,
            FeasibleSet::WholeSpace { dim } => *dim,
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => {
                let mut out = x.clone();
                for i in 0..out.len() {
                    out[i] = out[i].clamp(lo[i], hi[i]);
                }
                out
            }
            FeasibleSet::NonnegativeOrthant { .. } => x.map(|v| v.max(0.0)),
            FeasibleSet::WholeSpace { .. } => x.clone(),
        })
    }

    /// Componentwise membership test with slack `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        self.check_dim(x)?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => (0..x.len())
                .all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            FeasibleSet::NonnegativeOrthant { .. } => x.iter().all(|&v| v >= -tol),
            FeasibleSet::WholeSpace { .. } => true,
        })
    }
}
