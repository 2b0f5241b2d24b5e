//! Penalized Pearson SCCA as a generalized eigenproblem.

use super::fit::{FitMethod, FitTrace, SccaFit};
use super::objective::ObjectiveContext;
use crate::error::{Result, SccaError};
use crate::linalg::cross_covariance;
use nalgebra::{DMatrix, DVector};

/// Leading pair of the penalized Pearson problem, whatever `ctx.spec` says.
///
/// Maximizes `(a' Cxy b)^2` subject to `a'(Cxx + tau1 R)a = b'(Cyy + tau2 R)b = 1`
/// by whitening both blocks with their Cholesky factors and taking the
/// leading singular pair of the whitened cross block.
pub fn fit_classical(ctx: &ObjectiveContext) -> Result<SccaFit> {
    let (alpha, beta, _) = classical_directions(ctx)?;
    let ctx = ctx.with_spec(crate::robust::AssociationSpec::CovPearson);
    SccaFit::assemble(
        &ctx,
        &alpha,
        &beta,
        FitMethod::Spectral,
        None,
        FitTrace::default(),
    )
}

/// Raw (unnormalized) leading directions and the leading singular value.
pub(crate) fn classical_directions(
    ctx: &ObjectiveContext,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let cxx = cross_covariance(&ctx.scores_x, &ctx.scores_x);
    let cyy = cross_covariance(&ctx.scores_y, &ctx.scores_y);
    let cxy = cross_covariance(&ctx.scores_x, &ctx.scores_y);
    spectral_directions(ctx, cxx, cyy, &cxy)
}

/// Leading pair for arbitrary covariance blocks.
pub(crate) fn spectral_directions(
    ctx: &ObjectiveContext,
    cxx: DMatrix<f64>,
    cyy: DMatrix<f64>,
    cxy: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let bx = cxx + &ctx.penalty * ctx.smoothing.tau1;
    let by = cyy + &ctx.penalty * ctx.smoothing.tau2;
    let lx = cholesky_factor(&bx)?;
    let ly = cholesky_factor(&by)?;

    // M = Lx^{-1} Cxy Ly^{-T}
    let left = lx
        .solve_lower_triangular(cxy)
        .ok_or(SccaError::SingularBlock)?;
    let m = ly
        .solve_lower_triangular(&left.transpose())
        .ok_or(SccaError::SingularBlock)?
        .transpose();
    let svd = m.svd(true, true);
    let (mut best, mut s1) = (0, f64::NEG_INFINITY);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > s1 {
            s1 = *s;
            best = i;
        }
    }
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| SccaError::Numerical("SVD failed".into()))?;
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| SccaError::Numerical("SVD failed".into()))?;
    let a_white = u.column(best).clone_owned();
    let b_white = vt.row(best).transpose();
    let alpha = lx
        .transpose()
        .solve_upper_triangular(&a_white)
        .ok_or(SccaError::SingularBlock)?;
    let beta = ly
        .transpose()
        .solve_upper_triangular(&b_white)
        .ok_or(SccaError::SingularBlock)?;
    Ok((alpha, beta, s1))
}

fn cholesky_factor(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = b.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return Err(SccaError::SingularBlock);
    }
    let chol = b.clone().cholesky().ok_or(SccaError::SingularBlock)?;
    let l = chol.l();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if min_pivot <= 1e-13 * scale {
        return Err(SccaError::SingularBlock);
    }
    Ok(l)
}

/// Leading generalized eigenvector of `(C, J + tau R)`: the direction of
/// largest penalized variance.
pub(crate) fn penalized_principal_direction(
    scores: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    penalty: &DMatrix<f64>,
    tau: f64,
) -> Option<DVector<f64>> {
    let c = cross_covariance(scores, scores);
    let b = gram + penalty * tau;
    let l = b.cholesky()?.l();
    let left = l.solve_lower_triangular(&c)?;
    let m = l.solve_lower_triangular(&left.transpose())?.transpose();
    let (_, vectors) = crate::linalg::sym_eigen_sorted(&m);
    let top = vectors.column(vectors.ncols() - 1).clone_owned();
    l.transpose().solve_upper_triangular(&top)
}

/// Pairwise scatter of the joint score vector under `ctx.spec`, projected
/// onto the PSD cone and split into `(Cxx, Cyy, Cxy)`. Degenerate pairs count
/// as zero.
pub(crate) fn pairwise_scatter(
    ctx: &ObjectiveContext,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let d = ctx.d();
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| ctx.scores_x.column(j).iter().copied().collect())
        .chain((0..d).map(|j| ctx.scores_y.column(j).iter().copied().collect()))
        .collect();
    let mut w = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..2 * d {
        let si = ctx.spec.scale_of(&cols[i]).unwrap_or(0.0);
        w[(i, i)] = si * si;
        if si == 0.0 {
            continue;
        }
        for j in 0..i {
            if w[(j, j)] == 0.0 {
                continue;
            }
            let g = ctx
                .spec
                .coassociation(&cols[i], &cols[j])
                .map(|c| c.gamma)
                .unwrap_or(0.0);
            w[(i, j)] = g;
            w[(j, i)] = g;
        }
    }
    let (values, vectors) = crate::linalg::sym_eigen_sorted(&w);
    let clipped = DMatrix::from_diagonal(&values.map(|v| v.max(0.0)));
    let w = &vectors * clipped * vectors.transpose();
    (
        w.view((0, 0), (d, d)).into_owned(),
        w.view((d, d), (d, d)).into_owned(),
        w.view((0, d), (d, d)).into_owned(),
    )
}
