use super::objective::{ObjectiveContext, SmoothingParams};
use crate::error::Result;
use crate::function_space::{normalize_l2, normalize_penalized, Direction, NormConvention};
use crate::robust::AssociationSpec;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Whitening plus SVD of the penalized Pearson problem.
    Spectral,
    /// Alternating derivative-free maximization with restarts.
    Alternating,
}

/// Where one restart began and how its objective evolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub label: String,
    pub start_objective: f64,
    pub end_objective: f64,
    /// Objective after each sweep, starting with the initial value.
    pub sweeps: Vec<f64>,
    pub evaluations: usize,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub restarts: Vec<RestartRecord>,
    pub best_restart: Option<usize>,
}

/// Estimated first canonical pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccaFit {
    pub phi: Direction,
    pub psi: Direction,
    /// The same directions rescaled to unit penalized norm.
    pub phi_penalized: Option<Direction>,
    pub psi_penalized: Option<Direction>,
    /// Maximized penalized objective.
    pub lambda_hat: f64,
    /// Unpenalized association at the maximizer.
    pub assoc_unpenalized: f64,
    /// Signed association of the two projections at the maximizer.
    pub rho_hat: f64,
    pub method: FitMethod,
    pub spec: AssociationSpec,
    pub smoothing: SmoothingParams,
    pub seed: Option<u64>,
    pub trace: FitTrace,
}

impl SccaFit {
    pub fn phi_coef(&self) -> DVector<f64> {
        self.phi.coef_vector()
    }

    pub fn psi_coef(&self) -> DVector<f64> {
        self.psi.coef_vector()
    }

    pub(crate) fn assemble(
        ctx: &ObjectiveContext,
        alpha: &DVector<f64>,
        beta: &DVector<f64>,
        method: FitMethod,
        seed: Option<u64>,
        trace: FitTrace,
    ) -> Result<SccaFit> {
        let alpha = normalize_l2(alpha, &ctx.gram)?;
        let beta = normalize_l2(beta, &ctx.gram)?;
        let parts = ctx.parts(&alpha, &beta);
        let assoc_unpenalized = ctx.unpenalized(&alpha, &beta);
        let rho_hat = if parts.degenerate {
            0.0
        } else {
            parts.gamma / (parts.sigma_x * parts.sigma_y)
        };

        let penalized = |coef: &DVector<f64>, sigma: f64, tau: f64| {
            normalize_penalized(coef, sigma * sigma, &ctx.penalty, tau)
                .ok()
                .map(|c| Direction {
                    coef: c.iter().copied().collect(),
                    basis: ctx.basis,
                    norm_convention: NormConvention::PenalizedUnit,
                })
        };
        Ok(SccaFit {
            phi: Direction::l2_unit(&alpha, &ctx.gram, ctx.basis)?,
            psi: Direction::l2_unit(&beta, &ctx.gram, ctx.basis)?,
            phi_penalized: penalized(&alpha, parts.sigma_x, ctx.smoothing.tau1),
            psi_penalized: penalized(&beta, parts.sigma_y, ctx.smoothing.tau2),
            lambda_hat: parts.value,
            assoc_unpenalized,
            rho_hat,
            method,
            spec: ctx.spec,
            smoothing: ctx.smoothing,
            seed,
            trace,
        })
    }
}
