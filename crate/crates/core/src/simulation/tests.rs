use super::*;
use crate::error::SccaError;
use crate::function_space::{BasisKind, BasisSystem, Grid};
use crate::robust::{mean, median};
use std::f64::consts::PI;

fn grid() -> Grid {
    Grid::uniform(0.0, 2.0 * PI, 101).unwrap()
}

fn default_model() -> ProcessModel {
    make_canonical_model(4, 0.7, &[1.0, 0.5, 0.25, 0.125]).unwrap()
}

#[test]
fn population_oracle_reproduces_labels() {
    let m = default_model();
    let pop = population_cca(&m.score_cov_matrix(), 4).unwrap();
    assert!((pop.lambda - 0.49).abs() < 1e-10);
    let phi = pop.phi.normalize();
    let psi = pop.psi.normalize();
    assert!((phi[0].abs() - 1.0).abs() < 1e-10);
    assert!((psi[0].abs() - 1.0).abs() < 1e-10);
}

#[test]
fn rho_extremes() {
    let m0 = make_canonical_model(3, 0.0, &[1.0, 0.5, 0.2]).unwrap();
    assert!(
        population_cca(&m0.score_cov_matrix(), 3)
            .unwrap()
            .lambda
            .abs()
            < 1e-12
    );
    let m1 = make_canonical_model(3, 1.0, &[1.0, 0.5, 0.2]).unwrap();
    assert!((population_cca(&m1.score_cov_matrix(), 3).unwrap().lambda - 1.0).abs() < 1e-10);
    assert_eq!(m1.lambda0(), 1.0);
}

#[test]
fn invalid_inputs_rejected() {
    assert!(matches!(
        make_canonical_model(2, 1.2, &[1.0, 0.5]),
        Err(SccaError::InvalidArgument(_))
    ));
    assert!(make_canonical_model(2, 0.5, &[0.5, 1.0]).is_err());
    assert!(make_canonical_model(2, 0.5, &[1.0]).is_err());
    assert!(make_canonical_model(2, 0.5, &[1.0, 0.0]).is_err());
}

#[test]
fn mislabelled_model_fails_verification() {
    let mut m = default_model();
    m.true_phi_scores = vec![0.0, 1.0, 0.0, 0.0];
    assert!(matches!(m.verify(), Err(SccaError::InconsistentModel(_))));
    let mut m = default_model();
    m.rho0 = 0.6;
    assert!(m.verify().is_err());
}

#[test]
fn sampling_is_deterministic() {
    let m = default_model();
    let g = grid();
    let (x1, y1) = m.sample_pair(3, &g, 99).unwrap();
    let (x2, y2) = m.sample_pair(3, &g, 99).unwrap();
    assert_eq!(x1.values(), x2.values());
    assert_eq!(y1.values(), y2.values());
    let (x3, _) = m.sample_pair(3, &g, 100).unwrap();
    assert_ne!(x1.values(), x3.values());
    assert!(m.sample_pair(1, &g, 0).is_err());
}

#[test]
fn grid_must_cover_domain() {
    let m = default_model();
    let g = Grid::uniform(0.0, 1.0, 50).unwrap();
    assert!(matches!(
        m.sample_pair(5, &g, 0),
        Err(SccaError::InvalidGrid(_))
    ));
}

#[test]
fn scores_follow_the_model() {
    let m = default_model();
    let g = grid();
    let basis = BasisSystem::new(BasisKind::Fourier, 7, &g).unwrap();
    let (x, y) = m.sample_pair(20000, &g, 5).unwrap();
    let sx = x.project(&basis).unwrap();
    let sy = y.project(&basis).unwrap();
    let col =
        |s: &nalgebra::DMatrix<f64>, j: usize| s.column(j).iter().copied().collect::<Vec<f64>>();
    let r = crate::robust::pearson(&col(&sx, 0), &col(&sy, 0));
    assert!((r - 0.7).abs() < 0.02, "{r}");
    let var = |v: &[f64]| crate::robust::sd(v).powi(2);
    for (j, s) in [1.0, 0.5, 0.25, 0.125].iter().enumerate() {
        assert!((var(&col(&sx, j)) / s - 1.0).abs() < 0.05);
    }
    // components beyond K carry nothing
    assert!(var(&col(&sx, 5)) < 1e-20);
    let pop = m.population_in_basis(&basis).unwrap();
    assert!((pop.gamma11[(0, 0)] - 1.0).abs() < 1e-10);
    assert!((pop.gamma12[(0, 0)] - 0.7).abs() < 1e-10);
    assert!(pop.gamma12[(1, 1)].abs() < 1e-10);
    assert!((pop.gamma22[(3, 3)] - 0.125).abs() < 1e-10);
}

#[test]
fn t_tails_have_excess_kurtosis() {
    let m = default_model().with_tail(Tail::T { df: 3.0 }).unwrap();
    let g = grid();
    let basis = BasisSystem::new(BasisKind::Fourier, 3, &g).unwrap();
    let (x, _) = m.sample_pair(20000, &g, 11).unwrap();
    let s: Vec<f64> = x
        .project(&basis)
        .unwrap()
        .column(0)
        .iter()
        .copied()
        .collect();
    let mu = mean(&s);
    let m2 = s.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / s.len() as f64;
    let m4 = s.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / s.len() as f64;
    assert!(m4 / (m2 * m2) > 3.0);
    assert!(default_model().with_tail(Tail::T { df: 0.0 }).is_err());
}

#[test]
fn mean_function_is_recovered() {
    let mut mx = vec![0.0; 5];
    mx[1] = 2.0;
    let m = make_canonical_model(4, 0.5, &[1.0, 0.5, 0.25, 0.125])
        .unwrap()
        .with_means(mx, vec![0.0; 5])
        .unwrap();
    let g = grid();
    let (x, y) = m.sample_pair(4000, &g, 3).unwrap();
    let mean_x = x.mean_curve();
    let mean_y = y.mean_curve();
    for (t, v) in g.points().iter().zip(&mean_x) {
        let expected = 2.0 * t.sin() / PI.sqrt();
        assert!((v - expected).abs() < 0.1, "{t} {v} {expected}");
    }
    assert!(mean_y.iter().all(|v| v.abs() < 0.1));
}

#[test]
fn true_directions_are_unit_constants() {
    let m = default_model();
    let g = grid();
    let (phi, psi) = m.true_direction_curves(&g).unwrap();
    let c = 1.0 / (2.0 * PI).sqrt();
    assert!(phi.iter().chain(&psi).all(|v| (v - c).abs() < 1e-12));
    let fit = BasisSystem::new(BasisKind::Bspline, 8, &g).unwrap();
    let (a, _) = m.projected_truth(&fit).unwrap();
    // constants lie in the spline span
    let curve = fit.curve(&a);
    assert!(curve.iter().all(|v| (v - c).abs() < 1e-8));
}

#[test]
fn bspline_generator_keeps_scores() {
    let m = default_model()
        .with_generator(GeneratorBasis {
            kind: BasisKind::Bspline,
            d: 8,
        })
        .unwrap();
    m.verify().unwrap();
    let g = grid();
    let (x, _) = m.sample_pair(10, &g, 1).unwrap();
    assert_eq!(x.n(), 10);
    let (phi, _) = m.true_direction_curves(&g).unwrap();
    assert!((g.integrate(&phi.iter().map(|v| v * v).collect::<Vec<_>>()) - 1.0).abs() < 1e-10);
}

#[test]
fn contamination_count_and_identity() {
    let m = default_model();
    let g = grid();
    let (x, y) = m.sample_pair(100, &g, 8).unwrap();
    let none = ContaminationModel {
        fraction: 0.0,
        ..Default::default()
    };
    let (x0, y0) = contaminate(&x, &y, &none, 1).unwrap();
    assert_eq!(x0.values(), x.values());
    assert_eq!(y0.values(), y.values());

    let c = ContaminationModel::default();
    let (xc, yc) = contaminate(&x, &y, &c, 1).unwrap();
    let changed = |a: &crate::function_space::FunctionalSample,
                   b: &crate::function_space::FunctionalSample| {
        (0..100)
            .filter(|&i| a.values().row(i) != b.values().row(i))
            .count()
    };
    assert_eq!(changed(&x, &xc), 10);
    assert_eq!(changed(&y, &yc), 10);

    let xonly = ContaminationModel {
        target: ContaminationTarget::X,
        kind: ContaminationKind::ScoreShift,
        ..Default::default()
    };
    let (xs, ys) = contaminate(&x, &y, &xonly, 1).unwrap();
    assert_eq!(changed(&x, &xs), 10);
    assert_eq!(changed(&y, &ys), 0);
}

#[test]
fn contamination_fraction_bounds() {
    let m = default_model();
    let g = grid();
    let (x, y) = m.sample_pair(20, &g, 8).unwrap();
    let ok = ContaminationModel {
        fraction: 0.49,
        ..Default::default()
    };
    assert!(contaminate(&x, &y, &ok, 0).is_ok());
    let bad = ContaminationModel {
        fraction: 0.5,
        ..Default::default()
    };
    assert!(matches!(
        contaminate(&x, &y, &bad, 0),
        Err(SccaError::InvalidArgument(_))
    ));
}

#[test]
fn replaced_rows_hold_the_shape() {
    let m = default_model();
    let g = grid();
    let (mut x, mut y) = m.sample_pair(30, &g, 2).unwrap();
    let c = ContaminationModel::default();
    let rows = c.apply(&mut x, &mut y, 4).unwrap();
    assert_eq!(rows.len(), 3);
    let i = rows[0];
    let t = g.points()[10];
    assert!((x.values()[(i, 10)] - 10.0 * (2.0 * t).sin()).abs() < 1e-12);
    let med = median(&x.values().row(i).iter().copied().collect::<Vec<_>>());
    assert!(med.abs() < 1.0);
}
