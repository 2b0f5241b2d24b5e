use super::basis::BasisSystem;
use super::grid::Grid;
use crate::error::{Result, SccaError};
use nalgebra::DMatrix;

/// `n` curves observed on a shared grid; row `i` is curve `i`.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Grid,
    values: DMatrix<f64>,
}

impl FunctionalSample {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(SccaError::InvalidSample(format!(
                "need at least 2 curves, got {}",
                values.nrows()
            )));
        }
        if values.ncols() != grid.len() {
            return Err(SccaError::GridMismatch {
                sample: values.ncols(),
                basis: grid.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SccaError::InvalidSample("non-finite value".into()));
        }
        Ok(FunctionalSample { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// `n x d` matrix of basis scores.
    pub fn project(&self, basis: &BasisSystem) -> Result<DMatrix<f64>> {
        if !self.grid.same_as(basis.grid()) {
            return Err(SccaError::GridMismatch {
                sample: self.grid.len(),
                basis: basis.grid().len(),
            });
        }
        basis.project(&self.values)
    }

    pub fn mean_curve(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.values.column_iter().map(|c| c.sum() / n).collect()
    }
}
