//! Bivariate robust scatter: Huber-type M-scatter and the orthogonalized
//! GK (OGK) construction.

use super::gk::is_degenerate;
use super::scale::{median, ScaleSpec, MAD_NORMAL_CONSTANT};
use crate::error::{Result, SccaError};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Tuning of the Huber M-scatter estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MScatterTuning {
    /// chi-square(2) quantile level defining the Huber cutoff.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_quantile() -> f64 {
    0.9
}
fn default_max_iter() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-9
}

impl Default for MScatterTuning {
    fn default() -> Self {
        MScatterTuning {
            quantile: default_quantile(),
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

impl MScatterTuning {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(SccaError::InvalidArgument(format!(
                "M-scatter quantile must lie in (0, 1), got {}",
                self.quantile
            )));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(SccaError::InvalidArgument(
                "M-scatter needs max_iter > 0 and tol > 0".into(),
            ));
        }
        Ok(())
    }

    /// Huber cutoff `k` on squared distances: the chi-square(2) quantile.
    pub fn cutoff(&self) -> f64 {
        -2.0 * (1.0 - self.quantile).ln()
    }

    /// `E[min(D, k)] / 2` for `D ~ chi-square(2)`, which makes the fixed
    /// point equal to the covariance at the bivariate normal. For two
    /// dimensions it reduces to `1 - exp(-k/2)`, i.e. the quantile level.
    pub fn consistency(&self) -> f64 {
        1.0 - (-self.cutoff() / 2.0).exp()
    }

    /// Cutoff and consistency constant of the one-dimensional case: the
    /// chi-square(1) quantile at the same level and `E[min(D, k)]` for
    /// `D ~ chi-square(1)`.
    pub fn univariate(&self) -> (f64, f64) {
        let k = ChiSquared::new(1.0)
            .expect("df 1")
            .inverse_cdf(self.quantile);
        let beta = ChiSquared::new(3.0).expect("df 3").cdf(k) + k * (1.0 - self.quantile);
        (k, beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateScatter {
    pub w: [[f64; 2]; 2],
    pub location: [f64; 2],
    pub converged: bool,
    pub iterations: usize,
    /// Set when the iteration hit a singular matrix and was ridge-regularized.
    pub regularized: bool,
}

impl BivariateScatter {
    /// `W12 / sqrt(W11 W22)`.
    pub fn association(&self) -> Result<f64> {
        assoc_from_scatter(&self.w)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let [[a, b], [_, d]] = self.w;
        let half_tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        half_tr - disc
    }
}

pub fn assoc_from_scatter(w: &[[f64; 2]; 2]) -> Result<f64> {
    let (w11, w22) = (w[0][0], w[1][1]);
    if !(w11 > 0.0 && w22 > 0.0) {
        return Err(SccaError::DegenerateMargin);
    }
    Ok(w[0][1] / (w11 * w22).sqrt())
}

fn check_pair(u: &[f64], v: &[f64], min_n: usize) -> Result<()> {
    if u.len() != v.len() {
        return Err(SccaError::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < min_n {
        return Err(SccaError::InvalidArgument(format!(
            "scatter needs at least {min_n} observations, got {}",
            u.len()
        )));
    }
    Ok(())
}

fn initial_scale(x: &[f64]) -> Result<f64> {
    let mad = ScaleSpec::Mad {
        c: MAD_NORMAL_CONSTANT,
    }
    .estimate(x)?;
    if !is_degenerate(mad, x) {
        return Ok(mad);
    }
    let sd = ScaleSpec::Sd.estimate(x)?;
    if !is_degenerate(sd, x) {
        return Ok(sd);
    }
    Err(SccaError::DegenerateMargin)
}

/// Simultaneous M-estimate of location and scatter by fixed-point iteration
/// with Huber weights, started from the coordinatewise median and MAD.
pub fn scatter_m(u: &[f64], v: &[f64], tuning: &MScatterTuning) -> Result<BivariateScatter> {
    check_pair(u, v, 5)?;
    tuning.validate()?;
    let n = u.len();
    let k = tuning.cutoff();
    let sqrt_k = k.sqrt();
    let beta = tuning.consistency();

    let su = initial_scale(u)?;
    let sv = initial_scale(v)?;
    let mut loc = [median(u), median(v)];
    let mut w = [[su * su, 0.0], [0.0, sv * sv]];
    let mut converged = false;
    let mut regularized = false;
    let mut iterations = 0;

    while iterations < tuning.max_iter {
        iterations += 1;
        let mut det = w[0][0] * w[1][1] - w[0][1] * w[0][1];
        let trace = w[0][0] + w[1][1];
        if !(det > 1e-14 * trace * trace) {
            let ridge = 1e-12 * trace;
            w[0][0] += ridge;
            w[1][1] += ridge;
            det = w[0][0] * w[1][1] - w[0][1] * w[0][1];
            regularized = true;
        }
        let inv = [
            [w[1][1] / det, -w[0][1] / det],
            [-w[0][1] / det, w[0][0] / det],
        ];

        let mut sw1 = 0.0;
        let mut new_loc = [0.0, 0.0];
        let mut w2 = vec![0.0; n];
        for i in 0..n {
            let a = u[i] - loc[0];
            let b = v[i] - loc[1];
            let d2 = (inv[0][0] * a * a + 2.0 * inv[0][1] * a * b + inv[1][1] * b * b).max(0.0);
            let dist = d2.sqrt();
            let w1 = if dist > sqrt_k { sqrt_k / dist } else { 1.0 };
            w2[i] = if d2 > k { k / d2 } else { 1.0 } / beta;
            sw1 += w1;
            new_loc[0] += w1 * u[i];
            new_loc[1] += w1 * v[i];
        }
        new_loc[0] /= sw1;
        new_loc[1] /= sw1;

        let mut new_w = [[0.0; 2]; 2];
        for i in 0..n {
            let a = u[i] - new_loc[0];
            let b = v[i] - new_loc[1];
            new_w[0][0] += w2[i] * a * a;
            new_w[0][1] += w2[i] * a * b;
            new_w[1][1] += w2[i] * b * b;
        }
        for row in new_w.iter_mut() {
            for x in row.iter_mut() {
                *x /= n as f64;
            }
        }
        new_w[1][0] = new_w[0][1];

        let scale = new_w[0][0].abs() + new_w[1][1].abs();
        let dw = (new_w[0][0] - w[0][0]).abs()
            + 2.0 * (new_w[0][1] - w[0][1]).abs()
            + (new_w[1][1] - w[1][1]).abs();
        let dl = ((new_loc[0] - loc[0]).powi(2) / new_w[0][0].max(f64::MIN_POSITIVE)
            + (new_loc[1] - loc[1]).powi(2) / new_w[1][1].max(f64::MIN_POSITIVE))
        .sqrt();
        w = new_w;
        loc = new_loc;
        if dw <= tuning.tol * scale && dl <= tuning.tol {
            converged = true;
            break;
        }
    }

    Ok(BivariateScatter {
        w,
        location: loc,
        converged,
        iterations,
        regularized,
    })
}

/// Marginal scale matching [`scatter_m`]: the same Huber fixed point in one
/// dimension, iterated to rounding level.
pub fn scale_m(x: &[f64], tuning: &MScatterTuning) -> Result<f64> {
    if x.len() < 5 {
        return Err(SccaError::InvalidArgument(format!(
            "scatter needs at least 5 observations, got {}",
            x.len()
        )));
    }
    tuning.validate()?;
    let (k, beta) = tuning.univariate();
    let n = x.len() as f64;
    let mut loc = median(x);
    let mut s2 = initial_scale(x)?.powi(2);
    for _ in 0..tuning.max_iter.max(1000) {
        let (mut sw, mut sx) = (0.0, 0.0);
        for &xi in x {
            let d2 = (xi - loc).powi(2) / s2;
            let w1 = if d2 > k { (k / d2).sqrt() } else { 1.0 };
            sw += w1;
            sx += w1 * xi;
        }
        let new_loc = sx / sw;
        let new_s2 = x
            .iter()
            .map(|&xi| {
                let r2 = (xi - new_loc).powi(2);
                let d2 = r2 / s2;
                if d2 > k {
                    k / d2 * r2
                } else {
                    r2
                }
            })
            .sum::<f64>()
            / (n * beta);
        let done = (new_s2 - s2).abs() <= 1e-14 * s2 && (new_loc - loc).abs() <= 1e-14 * s2.sqrt();
        loc = new_loc;
        s2 = new_s2;
        if done {
            break;
        }
    }
    if !(s2 > 0.0) {
        return Err(SccaError::DegenerateMargin);
    }
    Ok(s2.sqrt())
}

/// Orthogonalized GK scatter specialized to two dimensions.
pub fn scatter_ogk(u: &[f64], v: &[f64], scale: &ScaleSpec) -> Result<BivariateScatter> {
    check_pair(u, v, 5)?;
    let su = scale.estimate(u)?;
    let sv = scale.estimate(v)?;
    if is_degenerate(su, u) || is_degenerate(sv, v) {
        return Err(SccaError::DegenerateMargin);
    }
    let y1: Vec<f64> = u.iter().map(|x| x / su).collect();
    let y2: Vec<f64> = v.iter().map(|x| x / sv).collect();

    // The unit-diagonal GK matrix [[1, r], [r, 1]] has eigenvectors
    // (1, 1)/sqrt2 and (1, -1)/sqrt2 whatever r is, so the principal scores
    // are fixed and only their scales need estimating.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z1: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| h * (a + b)).collect();
    let z2: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| h * (a - b)).collect();
    let g1 = scale.estimate(&z1)?.powi(2);
    let g2 = scale.estimate(&z2)?.powi(2);

    let diag = 0.5 * (g1 + g2);
    let off = 0.5 * (g1 - g2);
    let w = [
        [diag * su * su, off * su * sv],
        [off * su * sv, diag * sv * sv],
    ];

    let m1 = median(&z1);
    let m2 = median(&z2);
    let location = [h * (m1 + m2) * su, h * (m1 - m2) * sv];

    Ok(BivariateScatter {
        w,
        location,
        converged: true,
        iterations: 1,
        regularized: false,
    })
}
