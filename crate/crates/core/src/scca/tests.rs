use super::*;
use crate::error::SccaError;
use crate::exec::rng_from_seed;
use crate::function_space::{angle_degrees, BasisId, BasisKind};
use crate::robust::{pearson, AssociationSpec};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
}

fn fourier_penalty(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| {
        if i == j { i.div_ceil(2) as f64 } else { 0.0 }.powi(4)
    })
}

/// X and Y scores sharing a latent factor on the first coordinate.
fn context(n: usize, d: usize, tau: f64, spec: AssociationSpec, seed: u64) -> ObjectiveContext {
    let mut x = gaussian(n, d, seed);
    let mut y = gaussian(n, d, seed + 1000);
    for i in 0..n {
        y[(i, 0)] = 0.8 * x[(i, 0)] + 0.6 * y[(i, 0)];
    }
    for j in 0..d {
        let s = 1.0 / (1.0 + j as f64);
        x.column_mut(j).scale_mut(s);
        y.column_mut(j).scale_mut(s);
    }
    ObjectiveContext::from_parts(
        x,
        y,
        DMatrix::identity(d, d),
        fourier_penalty(d),
        BasisId {
            kind: BasisKind::Fourier,
            d,
        },
        spec,
        SmoothingParams::common(tau, d),
    )
    .unwrap()
}

fn random_unit(d: usize, seed: u64) -> DVector<f64> {
    let mut rng = rng_from_seed(seed);
    DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng))).normalize()
}

#[test]
fn pearson_objective_is_squared_correlation() {
    let ctx = context(50, 5, 0.0, AssociationSpec::CovPearson, 1);
    let a = random_unit(5, 2);
    let b = random_unit(5, 3);
    let r = pearson(&ctx.project_x(&a), &ctx.project_y(&b));
    assert!((ctx.objective(&a, &b) - r * r).abs() < 1e-12);
}

#[test]
fn gk_objective_ignores_beta_scale() {
    let ctx = context(60, 5, 0.0, AssociationSpec::gk_bounded_mad(), 4);
    let a = random_unit(5, 5);
    let b = random_unit(5, 6);
    let v = ctx.objective(&a, &b);
    assert!((ctx.objective(&a, &(&b * 7.0)) - v).abs() < 1e-12);
}

#[test]
fn null_space_alpha_ignores_tau1() {
    let base = context(40, 5, 0.0, AssociationSpec::gk_bounded_mad(), 7);
    let mut a = DVector::zeros(5);
    a[0] = 1.0;
    let b = random_unit(5, 8);
    let s = |t1: f64| {
        base.with_smoothing(SmoothingParams {
            tau1: t1,
            tau2: 0.2,
            d: 5,
        })
        .objective(&a, &b)
    };
    assert!((s(0.0) - s(10.0)).abs() < 1e-15);
}

#[test]
fn degenerate_projection_scores_zero() {
    let mut ctx = context(30, 3, 0.1, AssociationSpec::gk_bounded_mad(), 9);
    ctx.scores_x.column_mut(2).fill(0.0);
    let mut a = DVector::zeros(3);
    a[2] = 1.0;
    let parts = ctx.parts(&a, &random_unit(3, 1));
    assert_eq!(parts.value, 0.0);
    assert!(parts.degenerate);
}

#[test]
fn interpolation_when_d_is_n_minus_one() {
    let n = 12;
    let ctx = ObjectiveContext::from_parts(
        gaussian(n, n - 1, 3),
        gaussian(n, n - 1, 4),
        DMatrix::identity(n - 1, n - 1),
        fourier_penalty(n - 1),
        BasisId {
            kind: BasisKind::Fourier,
            d: n - 1,
        },
        AssociationSpec::CovPearson,
        SmoothingParams::common(0.0, n - 1),
    )
    .unwrap();
    let f = fit_classical(&ctx).unwrap();
    assert!((f.lambda_hat - 1.0).abs() < 1e-8, "{}", f.lambda_hat);
}

#[test]
fn identical_samples_correlate_perfectly() {
    let x = gaussian(40, 4, 10);
    let ctx = ObjectiveContext::from_parts(
        x.clone(),
        x,
        DMatrix::identity(4, 4),
        fourier_penalty(4),
        BasisId {
            kind: BasisKind::Fourier,
            d: 4,
        },
        AssociationSpec::CovPearson,
        SmoothingParams::common(0.0, 4),
    )
    .unwrap();
    let f = fit_classical(&ctx).unwrap();
    assert!((f.lambda_hat - 1.0).abs() < 1e-10);
    assert!(angle_degrees(&f.phi_coef(), &f.psi_coef(), &DMatrix::identity(4, 4)) < 1e-5);
}

#[test]
fn singular_block_is_reported() {
    let n = 5;
    let mut ctx = context(n, 7, 0.0, AssociationSpec::CovPearson, 11);
    assert!(matches!(fit_classical(&ctx), Err(SccaError::SingularBlock)));
    ctx.smoothing = SmoothingParams::common(0.5, 7);
    // the constant direction still carries variance, so the penalty fixes it
    assert!(fit_classical(&ctx).is_ok());
}

/// Maximizes over the product of unit circles by a 2000-point angular grid
/// per factor, then coordinate refinement.
fn circle_oracle(ctx: &ObjectiveContext) -> f64 {
    let at = |s: f64, t: f64| {
        let a = DVector::from_vec(vec![s.cos(), s.sin()]);
        let b = DVector::from_vec(vec![t.cos(), t.sin()]);
        ctx.objective(&a, &b)
    };
    let m = 2000;
    let h = std::f64::consts::PI / m as f64;
    let (mut bs, mut bt, mut bv) = (0.0, 0.0, f64::NEG_INFINITY);
    // the objective is pi-periodic in each angle; scan theta on the grid and
    // solve each beta subproblem on the same grid
    for i in 0..m {
        for j in 0..m {
            let v = at(i as f64 * h, j as f64 * h);
            if v > bv {
                (bs, bt, bv) = (i as f64 * h, j as f64 * h, v);
            }
        }
    }
    let mut step = h;
    while step > 1e-13 {
        let mut improved = false;
        for (ds, dt) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let v = at(bs + ds, bt + dt);
            if v > bv {
                (bs, bt, bv) = (bs + ds, bt + dt, v);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    bv
}

#[test]
fn classical_matches_grid_oracle_in_two_dimensions() {
    for (seed, tau) in [(21, 0.3), (22, 0.0)] {
        let ctx = context(30, 2, tau, AssociationSpec::CovPearson, seed);
        let f = fit_classical(&ctx).unwrap();
        let oracle = circle_oracle(&ctx);
        assert!(
            (f.lambda_hat - oracle).abs() < 1e-6,
            "{} vs {oracle}",
            f.lambda_hat
        );
    }
}

#[test]
fn classical_lambda_is_monotone_in_tau() {
    let ctx = context(80, 7, 0.0, AssociationSpec::CovPearson, 30);
    let mut prev = f64::INFINITY;
    for tau in [0.0, 0.01, 0.05, 0.1, 0.5, 2.0] {
        let f = fit_classical(&ctx.with_smoothing(SmoothingParams::common(tau, 7))).unwrap();
        assert!(f.lambda_hat <= prev + 1e-10);
        assert!(f.lambda_hat <= f.assoc_unpenalized + 1e-10);
        prev = f.lambda_hat;
    }
}

#[test]
fn alternating_agrees_with_spectral_for_pearson() {
    for seed in 0..4 {
        let ctx = context(60, 5, 0.05, AssociationSpec::CovPearson, 40 + seed);
        let spectral = fit_classical(&ctx).unwrap();
        let opts = RobustOptions {
            seed,
            ..Default::default()
        };
        let alt = fit_robust(&ctx, &opts).unwrap();
        assert!((spectral.lambda_hat - alt.lambda_hat).abs() < 1e-6);
        assert!(angle_degrees(&spectral.phi_coef(), &alt.phi_coef(), &ctx.gram) < 0.5);
        assert!(angle_degrees(&spectral.psi_coef(), &alt.psi_coef(), &ctx.gram) < 0.5);
    }
}

#[test]
fn dispatcher_picks_method() {
    let ctx = context(40, 3, 0.1, AssociationSpec::CovPearson, 50);
    assert_eq!(
        fit(&ctx, &FitOptions::default()).unwrap().method,
        FitMethod::Spectral
    );
    let forced = FitOptions {
        force_alternating: true,
        ..Default::default()
    };
    assert_eq!(fit(&ctx, &forced).unwrap().method, FitMethod::Alternating);
    let robust = ctx.with_spec(AssociationSpec::gk_bounded_mad());
    let f = fit(&robust, &FitOptions::default()).unwrap();
    assert_eq!(f.method, FitMethod::Alternating);
    assert_eq!(f.spec, AssociationSpec::gk_bounded_mad());
}

#[test]
fn robust_fit_invariants() {
    for spec in [
        AssociationSpec::gk_bounded_mad(),
        AssociationSpec::m_scatter(),
        AssociationSpec::ogk_mad(),
    ] {
        let ctx = context(80, 5, 0.05, spec, 60);
        let f = fit_robust(&ctx, &RobustOptions::default()).unwrap();
        assert!(f.lambda_hat >= 0.0);
        assert!(f.lambda_hat <= f.assoc_unpenalized + 1e-10);
        assert!(f.assoc_unpenalized <= 1.0 + 1e-10);
        for r in &f.trace.restarts {
            assert!(r.sweeps.windows(2).all(|w| w[1] >= w[0]), "{spec:?}");
            assert_eq!(r.end_objective, *r.sweeps.last().unwrap());
        }
        let best = f.trace.best_restart.unwrap();
        let top = f
            .trace
            .restarts
            .iter()
            .map(|r| r.end_objective)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(f.trace.restarts[best].end_objective, top);
        assert!((f.lambda_hat - top).abs() < 1e-12);
    }
}

#[test]
fn robust_fit_swap_symmetry() {
    let ctx = context(80, 5, 0.05, AssociationSpec::gk_bounded_mad(), 70);
    let mut swapped = ctx.clone();
    std::mem::swap(&mut swapped.scores_x, &mut swapped.scores_y);
    let opts = RobustOptions::default();
    let f = fit_robust(&ctx, &opts).unwrap();
    let g = fit_robust(&swapped, &opts).unwrap();
    assert!((f.lambda_hat - g.lambda_hat).abs() < 1e-6);
    assert!(angle_degrees(&f.phi_coef(), &g.psi_coef(), &ctx.gram) < 1.0);
    assert!(angle_degrees(&f.psi_coef(), &g.phi_coef(), &ctx.gram) < 1.0);
}

#[test]
fn robust_fit_scale_invariance() {
    let ctx = context(80, 5, 0.0, AssociationSpec::gk_bounded_mad(), 80);
    let mut scaled = ctx.clone();
    scaled.scores_x *= 5.0;
    let opts = RobustOptions::default();
    let f = fit_robust(&ctx, &opts).unwrap();
    let g = fit_robust(&scaled, &opts).unwrap();
    assert!((f.lambda_hat - g.lambda_hat).abs() < 1e-6);
    assert!(angle_degrees(&f.phi_coef(), &g.phi_coef(), &ctx.gram) < 1.0);
}

#[test]
fn robust_fit_is_deterministic_across_execution() {
    let ctx = context(50, 4, 0.1, AssociationSpec::gk_bounded_mad(), 90);
    let seq = RobustOptions {
        execution: crate::exec::Execution::Sequential,
        seed: 3,
        ..Default::default()
    };
    let par = RobustOptions {
        execution: crate::exec::Execution::Parallel,
        ..seq
    };
    assert_eq!(
        fit_robust(&ctx, &seq).unwrap(),
        fit_robust(&ctx, &par).unwrap()
    );
}

#[test]
fn robust_fit_preconditions() {
    let ctx = context(9, 3, 0.1, AssociationSpec::gk_bounded_mad(), 1);
    assert!(matches!(
        fit_robust(&ctx, &RobustOptions::default()),
        Err(SccaError::InvalidSample(_))
    ));
    let mut ctx = context(20, 3, 0.1, AssociationSpec::gk_bounded_mad(), 1);
    ctx.scores_x.fill(0.0);
    ctx.scores_y.fill(0.0);
    assert!(matches!(
        fit_robust(&ctx, &RobustOptions::default()),
        Err(SccaError::NoNondegenerateProjection)
    ));
}

#[test]
fn select_tau_single_and_duplicates() {
    let ctx = context(60, 5, 0.0, AssociationSpec::CovPearson, 100);
    let opts = FitOptions::default();
    let one = select_tau(&ctx, &[0.3], 3, &opts).unwrap();
    assert_eq!(one.tau, 0.3);
    let dup = select_tau(&ctx, &[0.1, 0.3, 0.1], 3, &opts).unwrap();
    assert_eq!(dup.table.len(), 2);
    let single = select_tau(&ctx, &[0.1], 3, &opts).unwrap();
    assert_eq!(single.table[0].criterion, dup.table[0].criterion);
    assert!(select_tau(&ctx, &[], 3, &opts).is_err());
    assert!(select_tau(&ctx, &[0.1], 1, &opts).is_err());
    assert!(select_tau(&ctx, &[-0.1], 3, &opts).is_err());
}

#[test]
fn select_tau_ties_prefer_larger() {
    // no penalty at all: every tau gives the same fit
    let mut ctx = context(60, 4, 0.0, AssociationSpec::CovPearson, 110);
    ctx.penalty.fill(0.0);
    let sel = select_tau(&ctx, &[0.0, 1.0, 5.0], 3, &FitOptions::default()).unwrap();
    assert_eq!(sel.tau, 5.0);
}

#[test]
fn select_tau_records_failures() {
    let mut ctx = context(12, 6, 0.0, AssociationSpec::CovPearson, 120);
    ctx.penalty = DMatrix::identity(6, 6);
    // tau = 0 leaves a rank-deficient block on 6-curve training folds
    let sel = select_tau(&ctx, &[0.0, 1.0], 2, &FitOptions::default()).unwrap();
    assert!(sel.table[0].criterion.is_none());
    assert_eq!(sel.table[0].failures.len(), 2);
    assert_eq!(sel.tau, 1.0);
}
