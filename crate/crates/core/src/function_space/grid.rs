use crate::error::{Result, SccaError};
use serde::{Deserialize, Serialize};

/// Observation grid on `[a, b]` with trapezoidal quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Equispaced grid of `m` points on `[a, b]`.
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(SccaError::InvalidGrid(format!(
                "need a < b, got a={a}, b={b}"
            )));
        }
        if m < 4 {
            return Err(SccaError::InvalidGrid(format!(
                "need at least 4 points, got {m}"
            )));
        }
        let h = (b - a) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| a + i as f64 * h).collect();
        points[m - 1] = b;
        Self::from_points(points)
    }

    /// Grid on arbitrary strictly increasing abscissae.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let m = points.len();
        if m < 4 {
            return Err(SccaError::InvalidGrid(format!(
                "need at least 4 points, got {m}"
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(SccaError::InvalidGrid("non-finite abscissa".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SccaError::InvalidGrid(
                "points must be strictly increasing".into(),
            ));
        }
        let mut weights = vec![0.0; m];
        for k in 0..m - 1 {
            let half = 0.5 * (points[k + 1] - points[k]);
            weights[k] += half;
            weights[k + 1] += half;
        }
        Ok(Grid { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.end() - self.start()
    }

    /// Trapezoidal integral of values sampled on the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len() == other.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}
