//! Convergence functionals, discrepancy diagnostics and replicate reports.

mod discrepancy;
mod report;

pub use discrepancy::{discrepancy_suprema, Discrepancies, PopulationScale};
pub use report::{quantile, ConvergenceReport, ReportRow, ReportSummary, SummaryStat};

use crate::robust::AssociationSpec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A convergence functional value; `degenerate` marks a zero-scale projection
/// (value forced to 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub degenerate: bool,
}

/// `gamma^2(<u1,X>, <u2,X>) / (sigma^2(<u1,X>) sigma^2(<u2,X>))` on one sample.
pub fn lx_metric(
    u1: &DVector<f64>,
    u2: &DVector<f64>,
    scores: &DMatrix<f64>,
    spec: &AssociationSpec,
) -> MetricValue {
    let p: Vec<f64> = (scores * u1).iter().copied().collect();
    let q: Vec<f64> = (scores * u2).iter().copied().collect();
    match spec.coassociation(&p, &q) {
        Ok(c) => {
            let denom = c.sigma_u * c.sigma_u * c.sigma_v * c.sigma_v;
            if denom > 0.0 && denom.is_finite() {
                MetricValue {
                    value: c.gamma * c.gamma / denom,
                    degenerate: false,
                }
            } else {
                MetricValue {
                    value: 0.0,
                    degenerate: true,
                }
            }
        }
        Err(_) => MetricValue {
            value: 0.0,
            degenerate: true,
        },
    }
}

/// Principal angle in the `gram` metric, degrees in `[0, 90]`.
pub fn angle_metric(a: &DVector<f64>, b: &DVector<f64>, gram: &DMatrix<f64>) -> f64 {
    crate::function_space::angle_degrees(a, b, gram)
}

#[cfg(test)]
mod tests;
