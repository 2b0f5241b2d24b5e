//! Fourier and clamped cubic B-spline bases with their Gram and
//! second-derivative penalty matrices.

use super::grid::Grid;
use crate::error::{Result, SccaError};
use crate::linalg::{complement_basis, sym_eigen_sorted};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Fourier,
    Bspline,
}

impl std::str::FromStr for BasisKind {
    type Err = SccaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(BasisKind::Fourier),
            "bspline" => Ok(BasisKind::Bspline),
            other => Err(SccaError::InvalidBasis(format!(
                "unknown basis kind '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisKind::Fourier => write!(f, "fourier"),
            BasisKind::Bspline => write!(f, "bspline"),
        }
    }
}

/// Identifies the basis a coefficient vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisId {
    pub kind: BasisKind,
    pub d: usize,
}

/// A finite basis evaluated on a grid.
///
/// `eval` and `eval_dd` are `d x m`; `gram[i][j] = <xi_i, xi_j>` and
/// `penalty[i][j] = <xi_i'', xi_j''>`, both by trapezoidal quadrature.
#[derive(Debug, Clone)]
pub struct BasisSystem {
    kind: BasisKind,
    grid: Grid,
    eval: DMatrix<f64>,
    eval_dd: DMatrix<f64>,
    gram: DMatrix<f64>,
    penalty: DMatrix<f64>,
}

impl BasisSystem {
    pub fn new(kind: BasisKind, d: usize, grid: &Grid) -> Result<Self> {
        if d > grid.len() {
            return Err(SccaError::InvalidBasis(format!(
                "dimension {d} exceeds the {} grid points",
                grid.len()
            )));
        }
        let (eval, eval_dd) = match kind {
            BasisKind::Fourier => fourier_eval(d, grid)?,
            BasisKind::Bspline => bspline_eval(d, grid)?,
        };
        let gram = weighted_gram(&eval, grid.weights());
        let penalty = weighted_gram(&eval_dd, grid.weights());
        Ok(BasisSystem {
            kind,
            grid: grid.clone(),
            eval,
            eval_dd,
            gram,
            penalty,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.eval.nrows()
    }

    pub fn id(&self) -> BasisId {
        BasisId {
            kind: self.kind,
            d: self.dim(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eval(&self) -> &DMatrix<f64> {
        &self.eval
    }

    pub fn eval_dd(&self) -> &DMatrix<f64> {
        &self.eval_dd
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// Roughness `Psi(u) = coef' R coef`.
    pub fn roughness(&self, coef: &DVector<f64>) -> f64 {
        crate::linalg::quad_form(&self.penalty, coef)
    }

    /// Evaluates the function with coefficients `coef` on the grid.
    pub fn curve(&self, coef: &DVector<f64>) -> Vec<f64> {
        (self.eval.transpose() * coef).iter().copied().collect()
    }

    /// Scores `<X_i, xi_j>` for every curve, as an `n x d` matrix.
    pub fn project(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if values.ncols() != self.grid.len() {
            return Err(SccaError::GridMismatch {
                sample: values.ncols(),
                basis: self.grid.len(),
            });
        }
        let mut weighted = self.eval.transpose();
        for (k, w) in self.grid.weights().iter().enumerate() {
            weighted.row_mut(k).scale_mut(*w);
        }
        Ok(values * weighted)
    }

    /// Null space of the penalty plus a lower bound of the penalty over its
    /// J-orthogonal complement.
    pub fn penalty_nullspace(&self, rel_tol: f64) -> PenaltyNullSpace {
        let d = self.dim();
        let (values, vectors) = sym_eigen_sorted(&self.penalty);
        let lmax = values[d - 1].max(0.0);
        let idx: Vec<usize> = (0..d).filter(|&i| values[i] < rel_tol * lmax).collect();
        let mut null = DMatrix::zeros(d, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            null.set_column(c, &vectors.column(i));
        }

        // u J-orthogonal to the null space  <=>  (J N)' u = 0.
        let jn = &self.gram * &null;
        let q = complement_basis(&jn, d);
        let min_ratio = if q.ncols() == 0 {
            f64::INFINITY
        } else {
            let rq = q.transpose() * &self.penalty * &q;
            let jq = q.transpose() * &self.gram * &q;
            generalized_min_eigenvalue(&rq, &jq)
        };
        PenaltyNullSpace {
            basis: null,
            min_ratio_on_complement: min_ratio,
        }
    }
}

/// Orthonormal null-space basis (columns) of the penalty matrix.
#[derive(Debug, Clone)]
pub struct PenaltyNullSpace {
    pub basis: DMatrix<f64>,
    /// `min u'Ru / u'Ju` over `u` J-orthogonal to the null space.
    pub min_ratio_on_complement: f64,
}

impl PenaltyNullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

fn generalized_min_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let chol = match b.clone().cholesky() {
        Some(c) => c,
        None => return f64::NAN,
    };
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::zeros(l.nrows(), l.ncols()));
    let m = &linv * a * linv.transpose();
    let (values, _) = sym_eigen_sorted(&m);
    values[0]
}

fn weighted_gram(eval: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut weighted = eval.clone();
    for (k, w) in weights.iter().enumerate() {
        weighted.column_mut(k).scale_mut(*w);
    }
    let g = &weighted * eval.transpose();
    crate::linalg::symmetrize(&g)
}

/// Constant, then `sin`/`cos` pairs of increasing frequency, orthonormal on `[a, b]`.
fn fourier_eval(d: usize, grid: &Grid) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(SccaError::InvalidBasis(format!(
            "fourier basis needs an odd dimension, got {d}"
        )));
    }
    let a = grid.start();
    let len = grid.length();
    let m = grid.len();
    let mut eval = DMatrix::zeros(d, m);
    let mut eval_dd = DMatrix::zeros(d, m);
    let c0 = 1.0 / len.sqrt();
    let c1 = (2.0 / len).sqrt();
    for (k, &t) in grid.points().iter().enumerate() {
        eval[(0, k)] = c0;
        for j in 1..=(d - 1) / 2 {
            let omega = 2.0 * PI * j as f64 / len;
            let (s, c) = (omega * (t - a)).sin_cos();
            eval[(2 * j - 1, k)] = c1 * s;
            eval[(2 * j, k)] = c1 * c;
            eval_dd[(2 * j - 1, k)] = -omega * omega * c1 * s;
            eval_dd[(2 * j, k)] = -omega * omega * c1 * c;
        }
    }
    Ok((eval, eval_dd))
}

const SPLINE_ORDER: usize = 4;

/// Clamped knot vector with equispaced interior knots.
pub(crate) fn clamped_knots(d: usize, a: f64, b: f64) -> Vec<f64> {
    let interior = d - SPLINE_ORDER;
    let mut knots = vec![a; SPLINE_ORDER];
    for i in 1..=interior {
        knots.push(a + (b - a) * i as f64 / (interior + 1) as f64);
    }
    knots.extend(std::iter::repeat_n(b, SPLINE_ORDER));
    knots
}

fn ratio(num: f64, den: f64) -> f64 {
    if den.abs() < 1e-300 {
        0.0
    } else {
        num / den
    }
}

/// Values and second derivatives of all cubic B-splines at `t`.
pub(crate) fn bspline_at(knots: &[f64], d: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let nk = knots.len();
    let b = knots[nk - 1];
    // order-1 indicators
    let mut n1 = vec![0.0; nk - 1];
    for j in 0..nk - 1 {
        let inside = if t >= b {
            // right endpoint belongs to the last nonempty interval
            knots[j] < knots[j + 1] && knots[j + 1] >= b
        } else {
            knots[j] <= t && t < knots[j + 1]
        };
        if inside {
            n1[j] = 1.0;
            break;
        }
    }
    let raise = |prev: &[f64], p: usize| -> Vec<f64> {
        (0..nk - p)
            .map(|j| {
                ratio(t - knots[j], knots[j + p - 1] - knots[j]) * prev[j]
                    + ratio(knots[j + p] - t, knots[j + p] - knots[j + 1]) * prev[j + 1]
            })
            .collect()
    };
    let n2 = raise(&n1, 2);
    let n3 = raise(&n2, 3);
    let n4 = raise(&n3, 4);

    // first derivatives of the order-3 functions
    let dn3: Vec<f64> = (0..nk - 3)
        .map(|j| {
            2.0 * (ratio(n2[j], knots[j + 2] - knots[j])
                - ratio(n2[j + 1], knots[j + 3] - knots[j + 1]))
        })
        .collect();
    let ddn4: Vec<f64> = (0..nk - 4)
        .map(|j| {
            3.0 * (ratio(dn3[j], knots[j + 3] - knots[j])
                - ratio(dn3[j + 1], knots[j + 4] - knots[j + 1]))
        })
        .collect();
    debug_assert_eq!(n4.len(), d);
    (n4, ddn4)
}

fn bspline_eval(d: usize, grid: &Grid) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if d < SPLINE_ORDER {
        return Err(SccaError::InvalidBasis(format!(
            "cubic B-spline basis needs d >= 4, got {d}"
        )));
    }
    let knots = clamped_knots(d, grid.start(), grid.end());
    let m = grid.len();
    let mut eval = DMatrix::zeros(d, m);
    let mut eval_dd = DMatrix::zeros(d, m);
    for (k, &t) in grid.points().iter().enumerate() {
        let (v, dd) = bspline_at(&knots, d, t);
        for j in 0..d {
            eval[(j, k)] = v[j];
            eval_dd[(j, k)] = dd[j];
        }
    }
    Ok((eval, eval_dd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_asymmetry;

    fn unit_grid(m: usize) -> Grid {
        Grid::uniform(0.0, 1.0, m).unwrap()
    }

    #[test]
    fn fourier_gram_is_identity() {
        let b = BasisSystem::new(BasisKind::Fourier, 5, &unit_grid(1001)).unwrap();
        let err = (b.gram() - DMatrix::<f64>::identity(5, 5)).amax();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn fourier_penalty_diagonal() {
        let b = BasisSystem::new(BasisKind::Fourier, 5, &unit_grid(1001)).unwrap();
        // symbolic: integral of (xi'')^2 for sqrt(2) sin/cos(2 pi k t) is (2 pi k)^4
        let expected = [
            0.0,
            (2.0 * PI).powi(4),
            (2.0 * PI).powi(4),
            (4.0 * PI).powi(4),
            (4.0 * PI).powi(4),
        ];
        let r = b.penalty();
        for i in 0..5 {
            if expected[i] == 0.0 {
                assert!(r[(i, i)].abs() < 1e-8);
            } else {
                assert!((r[(i, i)] / expected[i] - 1.0).abs() < 0.01);
            }
            for j in 0..5 {
                if i != j {
                    assert!(r[(i, j)].abs() < 1e-6 * expected[4]);
                }
            }
        }
    }

    #[test]
    fn bspline_penalty_nullspace_is_linear_polynomials() {
        let b = BasisSystem::new(BasisKind::Bspline, 8, &unit_grid(201)).unwrap();
        let (values, _) = sym_eigen_sorted(b.penalty());
        let lmax = values[7];
        let small = values.iter().filter(|v| **v < 1e-8 * lmax).count();
        assert_eq!(small, 2);
        assert_eq!(b.penalty_nullspace(1e-8).dim(), 2);
    }

    #[test]
    fn bspline_partition_of_unity() {
        let g = unit_grid(57);
        let b = BasisSystem::new(BasisKind::Bspline, 9, &g).unwrap();
        for k in 0..g.len() {
            let s: f64 = b.eval().column(k).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bspline_second_derivative_matches_finite_differences() {
        let knots = clamped_knots(7, 0.0, 1.0);
        let h = 1e-4;
        for &t in &[0.13, 0.41, 0.77] {
            let (_, dd) = bspline_at(&knots, 7, t);
            let (vp, _) = bspline_at(&knots, 7, t + h);
            let (v0, _) = bspline_at(&knots, 7, t);
            let (vm, _) = bspline_at(&knots, 7, t - h);
            for j in 0..7 {
                let fd = (vp[j] - 2.0 * v0[j] + vm[j]) / (h * h);
                assert!((fd - dd[j]).abs() < 1e-3 * (1.0 + dd[j].abs()), "{t} {j}");
            }
        }
    }

    #[test]
    fn fourier_nullspace_is_constants() {
        let b = BasisSystem::new(BasisKind::Fourier, 7, &unit_grid(1001)).unwrap();
        let ns = b.penalty_nullspace(1e-10);
        assert_eq!(ns.dim(), 1);
        let c = ns.basis.column(0);
        assert!(c[0].abs() > 1.0 - 1e-10);
        let bound = (2.0 * PI).powi(4);
        assert!(ns.min_ratio_on_complement >= bound * (1.0 - 1e-3));
    }

    #[test]
    fn zero_tolerance_on_definite_penalty_gives_empty_nullspace() {
        let b = BasisSystem::new(BasisKind::Fourier, 5, &unit_grid(101)).unwrap();
        // shift the penalty to be strictly positive definite
        let mut shifted = b.clone();
        shifted.penalty += DMatrix::<f64>::identity(5, 5);
        assert_eq!(shifted.penalty_nullspace(0.0).dim(), 0);
    }

    #[test]
    fn symmetric_matrices() {
        for kind in [BasisKind::Fourier, BasisKind::Bspline] {
            let b = BasisSystem::new(kind, 9, &unit_grid(301)).unwrap();
            assert!(max_abs_asymmetry(b.gram()) < 1e-12);
            assert!(max_abs_asymmetry(b.penalty()) < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let g = unit_grid(11);
        assert!(BasisSystem::new(BasisKind::Fourier, 4, &g).is_err());
        assert!(BasisSystem::new(BasisKind::Bspline, 3, &g).is_err());
        assert!(BasisSystem::new(BasisKind::Bspline, 12, &g).is_err());
    }
}
