use super::gk::{coassoc_gk, is_degenerate};
use super::scale::{mean, sd, ScaleSpec};
use super::scatter::{scale_m, scatter_m, scatter_ogk, MScatterTuning};
use crate::error::{Result, SccaError};
use serde::{Deserialize, Serialize};

/// The co-association / scale pair plugged into the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssociationSpec {
    CovPearson,
    GkStar {
        #[serde(default)]
        scale: ScaleSpec,
    },
    GkBounded {
        #[serde(default)]
        scale: ScaleSpec,
    },
    MScatter {
        #[serde(default)]
        tuning: MScatterTuning,
    },
    Ogk {
        #[serde(default)]
        scale: ScaleSpec,
    },
}

impl Default for AssociationSpec {
    fn default() -> Self {
        AssociationSpec::GkBounded {
            scale: ScaleSpec::mad(),
        }
    }
}

impl AssociationSpec {
    pub fn gk_bounded_mad() -> Self {
        AssociationSpec::default()
    }

    pub fn m_scatter() -> Self {
        AssociationSpec::MScatter {
            tuning: MScatterTuning::default(),
        }
    }

    pub fn ogk_mad() -> Self {
        AssociationSpec::Ogk {
            scale: ScaleSpec::mad(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AssociationSpec::CovPearson => "cov_pearson",
            AssociationSpec::GkStar { .. } => "gk_star",
            AssociationSpec::GkBounded { .. } => "gk_bounded",
            AssociationSpec::MScatter { .. } => "m_scatter",
            AssociationSpec::Ogk { .. } => "ogk",
        }
    }

    /// Whether `|rho| <= 1` is guaranteed.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, AssociationSpec::GkStar { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AssociationSpec::CovPearson => Ok(()),
            AssociationSpec::GkStar { scale }
            | AssociationSpec::GkBounded { scale }
            | AssociationSpec::Ogk { scale } => scale.validate(),
            AssociationSpec::MScatter { tuning } => tuning.validate(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: AssociationSpec = serde_json::from_str(s)
            .map_err(|e| SccaError::InvalidArgument(format!("bad association spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Marginal scale consistent with this spec's co-association.
    pub fn scale_of(&self, x: &[f64]) -> Result<f64> {
        match self {
            AssociationSpec::CovPearson => ScaleSpec::Sd.estimate(x),
            AssociationSpec::GkStar { scale }
            | AssociationSpec::GkBounded { scale }
            | AssociationSpec::Ogk { scale } => scale.estimate(x),
            AssociationSpec::MScatter { tuning } => scale_m(x, tuning),
        }
    }

    /// `(gamma, sigma_u, sigma_v, rho)` for the pair `(u, v)`.
    pub fn coassociation(&self, u: &[f64], v: &[f64]) -> Result<CoAssociation> {
        if u.len() != v.len() {
            return Err(SccaError::InvalidArgument(format!(
                "length mismatch: {} vs {}",
                u.len(),
                v.len()
            )));
        }
        match self {
            AssociationSpec::CovPearson => {
                if u.len() < 2 {
                    return Err(SccaError::InvalidArgument(
                        "need at least 2 observations".into(),
                    ));
                }
                let su = ScaleSpec::Sd.estimate(u)?;
                let sv = ScaleSpec::Sd.estimate(v)?;
                if is_degenerate(su, u) || is_degenerate(sv, v) {
                    return Err(SccaError::DegenerateMargin);
                }
                let (mu, mv) = (mean(u), mean(v));
                let cov = u
                    .iter()
                    .zip(v)
                    .map(|(a, b)| (a - mu) * (b - mv))
                    .sum::<f64>()
                    / (u.len() as f64 - 1.0);
                Ok(CoAssociation::new(cov, su, sv))
            }
            AssociationSpec::GkStar { scale } => {
                let g = coassoc_gk(u, v, scale, false)?;
                Ok(CoAssociation {
                    gamma: g.gamma,
                    sigma_u: g.sigma_u,
                    sigma_v: g.sigma_v,
                    rho: g.rho,
                })
            }
            AssociationSpec::GkBounded { scale } => {
                let g = coassoc_gk(u, v, scale, true)?;
                Ok(CoAssociation {
                    gamma: g.gamma,
                    sigma_u: g.sigma_u,
                    sigma_v: g.sigma_v,
                    rho: g.rho,
                })
            }
            AssociationSpec::MScatter { tuning } => from_scatter(scatter_m(u, v, tuning)?.w),
            AssociationSpec::Ogk { scale } => from_scatter(scatter_ogk(u, v, scale)?.w),
        }
    }
}

fn from_scatter(w: [[f64; 2]; 2]) -> Result<CoAssociation> {
    if !(w[0][0] > 0.0 && w[1][1] > 0.0) {
        return Err(SccaError::DegenerateMargin);
    }
    Ok(CoAssociation::new(w[0][1], w[0][0].sqrt(), w[1][1].sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoAssociation {
    pub gamma: f64,
    pub sigma_u: f64,
    pub sigma_v: f64,
    pub rho: f64,
}

impl CoAssociation {
    fn new(gamma: f64, sigma_u: f64, sigma_v: f64) -> Self {
        CoAssociation {
            gamma,
            sigma_u,
            sigma_v,
            rho: gamma / (sigma_u * sigma_v),
        }
    }
}

/// Pearson correlation, used by tests and diagnostics.
pub fn pearson(u: &[f64], v: &[f64]) -> f64 {
    let (mu, mv) = (mean(u), mean(v));
    let cov = u
        .iter()
        .zip(v)
        .map(|(a, b)| (a - mu) * (b - mv))
        .sum::<f64>()
        / (u.len() as f64 - 1.0);
    cov / (sd(u) * sd(v))
}
