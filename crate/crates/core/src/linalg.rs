//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eigen_sorted(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = symmetrize(a);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn quad_form(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        let mut col = 0.0;
        for i in 0..a.nrows() {
            col += a[(i, j)] * x[i];
        }
        acc += col * x[j];
    }
    acc
}

pub fn bilinear(a: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * a * y)[(0, 0)]
}

/// Sample covariance with the n-1 denominator between the columns of `x` and `y`.
pub fn cross_covariance(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let xc = center_columns(x);
    let yc = center_columns(y);
    xc.transpose() * yc / (n as f64 - 1.0)
}

pub fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    let n = x.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the column span of `a`
/// (columns of `a` need not be orthonormal).
pub fn complement_basis(a: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    let proj = a * a.transpose();
    let (values, vectors) = sym_eigen_sorted(&proj);
    let scale = values
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let keep: Vec<usize> = (0..dim).filter(|&i| values[i] <= 1e-10 * scale).collect();
    let mut out = DMatrix::zeros(dim, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &vectors.column(i));
    }
    out
}

pub fn max_abs_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}
