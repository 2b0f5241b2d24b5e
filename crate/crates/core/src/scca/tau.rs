//! K-fold selection of the smoothing parameter.

use super::fit::SccaFit;
use super::objective::ObjectiveContext;
use super::{fit, FitOptions};
use crate::error::{Result, SccaError};
use crate::exec::{map_indexed, rng_from_seed};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauCell {
    pub tau: f64,
    /// Mean held-out association over the folds that fitted.
    pub criterion: Option<f64>,
    pub fold_values: Vec<Option<f64>>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSelection {
    pub tau: f64,
    pub table: Vec<TauCell>,
}

/// Chooses the `tau` maximizing the mean held-out unpenalized association.
/// Ties go to the larger `tau`; duplicate grid values are merged.
pub fn select_tau(
    ctx: &ObjectiveContext,
    tau_grid: &[f64],
    folds: usize,
    opts: &FitOptions,
) -> Result<TauSelection> {
    if tau_grid.is_empty() {
        return Err(SccaError::InvalidArgument("empty tau grid".into()));
    }
    if folds < 2 {
        return Err(SccaError::InvalidArgument(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if folds > ctx.n() {
        return Err(SccaError::InvalidArgument(format!(
            "{folds} folds for {} curves",
            ctx.n()
        )));
    }
    let mut grid: Vec<f64> = tau_grid.to_vec();
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(SccaError::InvalidArgument(
            "tau grid values must be finite and >= 0".into(),
        ));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut order: Vec<usize> = (0..ctx.n()).collect();
    order.shuffle(&mut rng_from_seed(opts.robust.seed));
    let fold_of = |pos: usize| pos * folds / ctx.n();
    let test_sets: Vec<Vec<usize>> = (0..folds)
        .map(|k| {
            (0..ctx.n())
                .filter(|&p| fold_of(p) == k)
                .map(|p| order[p])
                .collect()
        })
        .collect();
    let train_sets: Vec<Vec<usize>> = (0..folds)
        .map(|k| {
            (0..ctx.n())
                .filter(|&p| fold_of(p) != k)
                .map(|p| order[p])
                .collect()
        })
        .collect();

    let cells = grid.len() * folds;
    let results: Vec<std::result::Result<f64, String>> =
        map_indexed(opts.robust.execution, cells, |c| {
            let (ti, k) = (c / folds, c % folds);
            let train = ctx
                .subset(&train_sets[k])
                .with_smoothing(ctx.smoothing.with_tau(grid[ti]));
            let test = ctx.subset(&test_sets[k]);
            let inner = FitOptions {
                robust: super::RobustOptions {
                    execution: crate::exec::Execution::Sequential,
                    ..opts.robust
                },
                ..*opts
            };
            fit(&train, &inner)
                .map(|f: SccaFit| test.unpenalized(&f.phi_coef(), &f.psi_coef()))
                .map_err(|e| e.to_string())
        });

    let mut table = Vec::with_capacity(grid.len());
    for (ti, &tau) in grid.iter().enumerate() {
        let mut fold_values = Vec::with_capacity(folds);
        let mut failures = Vec::new();
        for k in 0..folds {
            match &results[ti * folds + k] {
                Ok(v) => fold_values.push(Some(*v)),
                Err(e) => {
                    fold_values.push(None);
                    failures.push(format!("fold {k}: {e}"));
                }
            }
        }
        let ok: Vec<f64> = fold_values.iter().flatten().copied().collect();
        let criterion = if ok.is_empty() {
            None
        } else {
            Some(ok.iter().sum::<f64>() / ok.len() as f64)
        };
        table.push(TauCell {
            tau,
            criterion,
            fold_values,
            failures,
        });
    }

    let mut best: Option<(f64, f64)> = None;
    for cell in &table {
        if let Some(c) = cell.criterion {
            // grid ascending, so >= moves ties to the larger tau
            if best.is_none_or(|(_, bc)| c >= bc) {
                best = Some((cell.tau, c));
            }
        }
    }
    let (tau, _) = best.ok_or_else(|| SccaError::Numerical("every tau-grid cell failed".into()))?;
    Ok(TauSelection { tau, table })
}
