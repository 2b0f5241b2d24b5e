//! Outlier injection for robustness studies.

use crate::error::{Result, SccaError};
use crate::exec::rng_from_seed;
use crate::function_space::{FunctionalSample, Grid};
use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationKind {
    /// Selected curves are overwritten by `magnitude * shape`.
    CurveReplacement,
    /// `magnitude * shape` is added to the selected curves.
    ScoreShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationTarget {
    X,
    Y,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `sin(2 pi cycles (t - a) / (b - a))`.
    Sine { cycles: f64 },
    /// Values on the sample grid.
    Curve { values: Vec<f64> },
}

impl Shape {
    pub fn on_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Shape::Sine { cycles } => {
                let (a, len) = (grid.start(), grid.length());
                Ok(grid
                    .points()
                    .iter()
                    .map(|t| (2.0 * std::f64::consts::PI * cycles * (t - a) / len).sin())
                    .collect())
            }
            Shape::Curve { values } => {
                if values.len() != grid.len() {
                    return Err(SccaError::GridMismatch {
                        sample: values.len(),
                        basis: grid.len(),
                    });
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContaminationModel {
    pub fraction: f64,
    pub kind: ContaminationKind,
    pub target: ContaminationTarget,
    pub magnitude: f64,
    pub shape: Shape,
}

impl Default for ContaminationModel {
    fn default() -> Self {
        ContaminationModel {
            fraction: 0.1,
            kind: ContaminationKind::CurveReplacement,
            target: ContaminationTarget::Both,
            magnitude: 10.0,
            shape: Shape::Sine { cycles: 2.0 },
        }
    }
}

impl ContaminationModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.fraction) {
            return Err(SccaError::InvalidArgument(format!(
                "contamination fraction must lie in [0, 0.5), got {}",
                self.fraction
            )));
        }
        if !self.magnitude.is_finite() {
            return Err(SccaError::InvalidArgument(
                "contamination magnitude must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Number of rows altered in a sample of size `n`.
    pub fn count(&self, n: usize) -> usize {
        ((self.fraction * n as f64).round() as usize).min(n)
    }

    /// Alters `round(fraction * n)` rows chosen without replacement; the same
    /// rows are used for `X` and `Y`. Returns the altered row indices, sorted.
    pub fn apply(
        &self,
        x: &mut FunctionalSample,
        y: &mut FunctionalSample,
        seed: u64,
    ) -> Result<Vec<usize>> {
        self.validate()?;
        if x.n() != y.n() {
            return Err(SccaError::InvalidSample(format!(
                "X has {} curves but Y has {}",
                x.n(),
                y.n()
            )));
        }
        let n = x.n();
        let mut rows = sample_indices(&mut rng_from_seed(seed), n, self.count(n)).into_vec();
        rows.sort_unstable();
        let alter = |s: &mut FunctionalSample| -> Result<()> {
            let curve: Vec<f64> = self
                .shape
                .on_grid(s.grid())?
                .iter()
                .map(|v| v * self.magnitude)
                .collect();
            let values = s.values_mut();
            for &i in &rows {
                for (t, c) in curve.iter().enumerate() {
                    match self.kind {
                        ContaminationKind::CurveReplacement => values[(i, t)] = *c,
                        ContaminationKind::ScoreShift => values[(i, t)] += *c,
                    }
                }
            }
            Ok(())
        };
        if matches!(
            self.target,
            ContaminationTarget::X | ContaminationTarget::Both
        ) {
            alter(x)?;
        }
        if matches!(
            self.target,
            ContaminationTarget::Y | ContaminationTarget::Both
        ) {
            alter(y)?;
        }
        Ok(rows)
    }
}

/// Copying form of [`ContaminationModel::apply`].
pub fn contaminate(
    x: &FunctionalSample,
    y: &FunctionalSample,
    model: &ContaminationModel,
    seed: u64,
) -> Result<(FunctionalSample, FunctionalSample)> {
    let (mut x, mut y) = (x.clone(), y.clone());
    model.apply(&mut x, &mut y, seed)?;
    Ok((x, y))
}
