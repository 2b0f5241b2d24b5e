use super::basis::BasisId;
use crate::error::{Result, SccaError};
use crate::linalg::quad_form;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    /// `coef' J coef = 1`.
    L2Unit,
    /// `sigma^2(u) + tau Psi(u) = 1`.
    PenalizedUnit,
}

/// Coefficients of a candidate canonical direction in a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub coef: Vec<f64>,
    pub basis: BasisId,
    pub norm_convention: NormConvention,
}

impl Direction {
    pub fn coef_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coef)
    }

    /// J-unit normalization with the largest-magnitude coefficient made positive.
    pub fn l2_unit(coef: &DVector<f64>, gram: &DMatrix<f64>, basis: BasisId) -> Result<Self> {
        let unit = normalize_l2(coef, gram)?;
        Ok(Direction {
            coef: unit.iter().copied().collect(),
            basis,
            norm_convention: NormConvention::L2Unit,
        })
    }
}

/// Divides by the J-norm and fixes the sign so the largest-|.| entry is positive.
pub fn normalize_l2(coef: &DVector<f64>, gram: &DMatrix<f64>) -> Result<DVector<f64>> {
    let norm_sq = quad_form(gram, coef);
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(SccaError::InvalidArgument(
            "cannot normalize a zero direction".into(),
        ));
    }
    let mut out = coef / norm_sq.sqrt();
    fix_sign(&mut out);
    Ok(out)
}

/// Rescales so that `scale_sq_of(coef) + tau Psi(coef) = 1`; `scale_sq_of`
/// must be homogeneous of degree two.
pub fn normalize_penalized(
    coef: &DVector<f64>,
    scale_sq: f64,
    penalty: &DMatrix<f64>,
    tau: f64,
) -> Result<DVector<f64>> {
    let norm_sq = penalized_norm_sq(coef, penalty, scale_sq, tau)?;
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(SccaError::InvalidArgument("zero penalized norm".into()));
    }
    let mut out = coef / norm_sq.sqrt();
    fix_sign(&mut out);
    Ok(out)
}

pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// `||u||^2_{tau} = scale_sq + tau * coef' R coef`.
pub fn penalized_norm_sq(
    coef: &DVector<f64>,
    penalty: &DMatrix<f64>,
    scale_sq: f64,
    tau: f64,
) -> Result<f64> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(SccaError::InvalidArgument(format!(
            "tau must be >= 0, got {tau}"
        )));
    }
    Ok(scale_sq + tau * quad_form(penalty, coef))
}

/// Principal angle in degrees between two directions in the J inner product.
pub fn angle_degrees(a: &DVector<f64>, b: &DVector<f64>, gram: &DMatrix<f64>) -> f64 {
    let ab = crate::linalg::bilinear(gram, a, b);
    let aa = quad_form(gram, a);
    let bb = quad_form(gram, b);
    let c = (ab.abs() / (aa * bb).sqrt()).min(1.0);
    c.acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(d: usize) -> DMatrix<f64> {
        DMatrix::identity(d, d)
    }

    #[test]
    fn normalize_examples() {
        let u = normalize_l2(&DVector::from_vec(vec![0.0, 2.0]), &eye(2)).unwrap();
        assert_eq!(u.as_slice(), &[0.0, 1.0]);
        let u = normalize_l2(&DVector::from_vec(vec![-3.0, 0.0]), &eye(2)).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 0.0]);
        let x = DVector::from_vec(vec![0.6, -0.8]);
        let once = normalize_l2(&x, &eye(2)).unwrap();
        let twice = normalize_l2(&once, &eye(2)).unwrap();
        assert!((once - twice).amax() < 1e-12);
        assert!(normalize_l2(&DVector::zeros(3), &eye(3)).is_err());
    }

    #[test]
    fn penalized_norm_examples() {
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let c = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(penalized_norm_sq(&c, &r, 1.0, 0.0).unwrap(), 1.0);
        assert!((penalized_norm_sq(&c, &r, 1.0, 0.1).unwrap() - 1.2).abs() < 1e-15);
        let null = DVector::from_vec(vec![0.0, 3.0]);
        for tau in [0.0, 1.0, 1e6] {
            assert_eq!(penalized_norm_sq(&null, &r, 0.7, tau).unwrap(), 0.7);
        }
        assert!(penalized_norm_sq(&c, &r, 1.0, -1.0).is_err());
    }

    #[test]
    fn angles() {
        let a = DVector::from_vec(vec![1.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, -2.0]);
        assert!((angle_degrees(&a, &b, &eye(2)) - 90.0).abs() < 1e-12);
        assert!(angle_degrees(&a, &(-&a), &eye(2)) < 1e-6);
    }
}
