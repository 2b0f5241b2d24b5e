//! Gnanadesikan–Kettenring co-association through the polarization identity.

use super::scale::ScaleSpec;
use crate::error::{Result, SccaError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkEstimate {
    pub gamma: f64,
    pub rho: f64,
    pub sigma_plus_sq: f64,
    pub sigma_minus_sq: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
}

impl GkEstimate {
    /// `|rho| > 1`, only possible for the unbounded variant.
    pub fn out_of_range(&self) -> bool {
        self.rho.abs() > 1.0
    }
}

/// Returns `(gamma, rho)` as `gamma_GK`/`rho_GK` when `bounded`, else
/// `gamma*`/`rho*`. Fails with [`SccaError::DegenerateMargin`] if either
/// margin has zero scale.
pub fn coassoc_gk(u: &[f64], v: &[f64], scale: &ScaleSpec, bounded: bool) -> Result<GkEstimate> {
    if u.len() != v.len() {
        return Err(SccaError::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let sigma_u = scale.estimate(u)?;
    let sigma_v = scale.estimate(v)?;
    if is_degenerate(sigma_u, u) || is_degenerate(sigma_v, v) {
        return Err(SccaError::DegenerateMargin);
    }
    let plus: Vec<f64> = u
        .iter()
        .zip(v)
        .map(|(a, b)| a / sigma_u + b / sigma_v)
        .collect();
    let minus: Vec<f64> = u
        .iter()
        .zip(v)
        .map(|(a, b)| a / sigma_u - b / sigma_v)
        .collect();
    let sp = scale.estimate(&plus)?;
    let sm = scale.estimate(&minus)?;
    let sigma_plus_sq = sp * sp;
    let sigma_minus_sq = sm * sm;
    let rho = gk_rho(sigma_plus_sq, sigma_minus_sq, bounded);
    Ok(GkEstimate {
        gamma: sigma_u * sigma_v * rho,
        rho,
        sigma_plus_sq,
        sigma_minus_sq,
        sigma_u,
        sigma_v,
    })
}

/// `rho_GK` when `bounded`, else `rho*`.
pub(crate) fn gk_rho(sigma_plus_sq: f64, sigma_minus_sq: f64, bounded: bool) -> f64 {
    if bounded {
        let total = sigma_plus_sq + sigma_minus_sq;
        if total > 0.0 {
            (sigma_plus_sq - sigma_minus_sq) / total
        } else {
            0.0
        }
    } else {
        (sigma_plus_sq - sigma_minus_sq) / 4.0
    }
}

/// Zero scale, or a scale lost in rounding relative to the data magnitude.
pub(crate) fn is_degenerate(sigma: f64, x: &[f64]) -> bool {
    let magnitude = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    !(sigma > 1e-12 * magnitude) || magnitude == 0.0
}
