//! Univariate scale functionals: SD, MAD and a bisquare M-scale.

use crate::error::{Result, SccaError};
use serde::{Deserialize, Serialize};

/// `1 / Phi^{-1}(0.75)`, making the MAD consistent for the SD at the normal.
pub const MAD_NORMAL_CONSTANT: f64 = 1.482_602_218_505_601_8;
/// Bisquare tuning constant giving `sigma(Phi) = 1` with `b = 0.5`.
pub const BISQUARE_TUNING: f64 = 1.54764;
pub const MSCALE_BREAKDOWN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFamily {
    #[default]
    Bisquare,
}

fn default_mad_c() -> f64 {
    MAD_NORMAL_CONSTANT
}

fn default_tuning() -> f64 {
    BISQUARE_TUNING
}

fn default_b() -> f64 {
    MSCALE_BREAKDOWN
}

/// Which scale functional to use, with its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleSpec {
    Sd,
    Mad {
        #[serde(default = "default_mad_c")]
        c: f64,
    },
    Mscale {
        #[serde(default)]
        family: ScoreFamily,
        #[serde(default = "default_tuning")]
        tuning: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
}

impl Default for ScaleSpec {
    fn default() -> Self {
        ScaleSpec::mad()
    }
}

impl ScaleSpec {
    pub fn mad() -> Self {
        ScaleSpec::Mad {
            c: MAD_NORMAL_CONSTANT,
        }
    }

    pub fn mscale() -> Self {
        ScaleSpec::Mscale {
            family: ScoreFamily::Bisquare,
            tuning: BISQUARE_TUNING,
            b: MSCALE_BREAKDOWN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScaleSpec::Sd => Ok(()),
            ScaleSpec::Mad { c } => {
                if c > 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(SccaError::InvalidArgument(format!(
                        "MAD constant must be > 0, got {c}"
                    )))
                }
            }
            ScaleSpec::Mscale { tuning, b, .. } => {
                if !(tuning > 0.0 && tuning.is_finite()) {
                    return Err(SccaError::InvalidArgument(format!(
                        "M-scale tuning must be > 0, got {tuning}"
                    )));
                }
                if !(b > 0.0 && b <= 0.5) {
                    return Err(SccaError::InvalidArgument(format!(
                        "M-scale target must lie in (0, 0.5], got {b}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Scale of `x`; 0 for constant input.
    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        if x.len() < 2 {
            return Err(SccaError::InvalidArgument(format!(
                "scale needs at least 2 observations, got {}",
                x.len()
            )));
        }
        let mut buf = Vec::new();
        Ok(self.estimate_with(x, &mut buf))
    }

    /// [`ScaleSpec::estimate`] for `x.len() >= 2`, using `buf` as scratch.
    pub(crate) fn estimate_with(&self, x: &[f64], buf: &mut Vec<f64>) -> f64 {
        if x.iter().all(|v| *v == x[0]) {
            return 0.0;
        }
        buf.clear();
        buf.extend_from_slice(x);
        match *self {
            ScaleSpec::Sd => sd(x),
            ScaleSpec::Mad { c } => c * mad_raw(buf),
            ScaleSpec::Mscale { tuning, b, .. } => mscale_bisquare(buf, tuning, b),
        }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Square root of the `n - 1` denominator variance.
pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() as f64 - 1.0)).sqrt()
}

/// Median with the midpoint rule for even lengths. Reorders `buf`.
pub fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (left, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

pub fn median(x: &[f64]) -> f64 {
    let mut buf = x.to_vec();
    median_in_place(&mut buf)
}

/// Unscaled `median |x - median(x)|`. Overwrites `buf`.
pub fn mad_raw(buf: &mut [f64]) -> f64 {
    let med = median_in_place(buf);
    for v in buf.iter_mut() {
        *v = (*v - med).abs();
    }
    median_in_place(buf)
}

#[inline]
fn rho_bisquare(x: f64, c: f64) -> f64 {
    let u = x / c;
    if u.abs() >= 1.0 {
        1.0
    } else {
        let w = 1.0 - u * u;
        1.0 - w * w * w
    }
}

fn mean_rho(abs_res: &[f64], s: f64, c: f64) -> f64 {
    abs_res.iter().map(|r| rho_bisquare(r / s, c)).sum::<f64>() / abs_res.len() as f64
}

/// Solves `mean(rho((x - median) / s)) = b` by bisection on `log s`.
fn mscale_bisquare(buf: &mut [f64], c: f64, b: f64) -> f64 {
    let med = median_in_place(buf);
    for v in buf.iter_mut() {
        *v = (*v - med).abs();
    }
    let nonzero = buf.iter().filter(|r| **r > 0.0).count() as f64 / buf.len() as f64;
    // mean_rho tends to the fraction of nonzero residuals as s -> 0
    if nonzero <= b {
        return 0.0;
    }
    let max_res = buf.iter().copied().fold(0.0_f64, f64::max);
    let mut hi = max_res / c * 2.0;
    let mut lo = hi;
    while mean_rho(buf, lo, c) <= b {
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    while mean_rho(buf, hi, c) > b {
        hi *= 2.0;
    }
    while (hi - lo) > 1e-12 * hi {
        let mid = (lo * hi).sqrt();
        if mean_rho(buf, mid, c) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn mad_hand_computation() {
        let s = ScaleSpec::Mad { c: 1.4826 }
            .estimate(&[1.0, 2.0, 3.0, 4.0, 5.0])
            .unwrap();
        assert!((s - 1.4826).abs() < 1e-12);
    }

    #[test]
    fn even_median_is_midpoint() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn constant_input_has_zero_scale() {
        for spec in [ScaleSpec::Sd, ScaleSpec::mad(), ScaleSpec::mscale()] {
            assert_eq!(spec.estimate(&[5.0; 4]).unwrap(), 0.0);
        }
    }

    #[test]
    fn singleton_rejected() {
        assert!(ScaleSpec::Sd.estimate(&[1.0]).is_err());
        assert!(ScaleSpec::mad().estimate(&[]).is_err());
    }

    #[test]
    fn mscale_majority_tie_is_zero() {
        let x = [1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        assert_eq!(ScaleSpec::mscale().estimate(&x).unwrap(), 0.0);
    }

    #[test]
    fn mscale_solves_its_equation() {
        let x = [0.3, -1.2, 2.2, 0.1, -0.4, 5.0, 0.8, -2.0];
        let s = ScaleSpec::mscale().estimate(&x).unwrap();
        let med = median(&x);
        let m: f64 = x
            .iter()
            .map(|v| rho_bisquare((v - med) / s, BISQUARE_TUNING))
            .sum::<f64>()
            / 8.0;
        assert!((m - 0.5).abs() < 1e-9);
    }

    #[test]
    fn mscale_normal_consistency() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let s = ScaleSpec::mscale().estimate(&x).unwrap();
        assert!((s - 1.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn spec_validation() {
        assert!(ScaleSpec::Mad { c: 0.0 }.validate().is_err());
        assert!(ScaleSpec::Mscale {
            family: ScoreFamily::Bisquare,
            tuning: 1.5,
            b: 0.6
        }
        .validate()
        .is_err());
        assert!(ScaleSpec::mscale().validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let s: ScaleSpec =
            serde_json::from_str(r#"{"kind":"mad","c":1.4826022185056018}"#).unwrap();
        assert_eq!(s, ScaleSpec::mad());
        let s: ScaleSpec = serde_json::from_str(r#"{"kind":"mscale"}"#).unwrap();
        assert_eq!(s, ScaleSpec::mscale());
    }
}
