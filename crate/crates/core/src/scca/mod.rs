//! Classical and robust smoothed canonical correlation estimators.

mod classical;
mod fit;
mod nelder_mead;
mod objective;
mod robust;
mod tau;

pub use classical::fit_classical;
pub use fit::{FitMethod, FitTrace, RestartRecord, SccaFit};
pub use nelder_mead::{maximize as nelder_mead_maximize, NelderMeadOptions, NelderMeadResult};
pub use objective::{ObjectiveContext, ObjectiveParts, SmoothingParams};
pub use robust::{fit_robust, RobustOptions};
pub use tau::{select_tau, TauCell, TauSelection};

use crate::error::Result;
use crate::robust::AssociationSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    /// Use the alternating optimizer even for the Pearson spec.
    #[serde(default)]
    pub force_alternating: bool,
    #[serde(default)]
    pub robust: RobustOptions,
}

/// Spectral solver for the Pearson spec, alternating optimizer otherwise.
pub fn fit(ctx: &ObjectiveContext, opts: &FitOptions) -> Result<SccaFit> {
    match ctx.spec {
        AssociationSpec::CovPearson if !opts.force_alternating => fit_classical(ctx),
        _ => fit_robust(ctx, &opts.robust),
    }
}

#[cfg(test)]
mod tests;
