use super::*;
use crate::exec::rng_from_seed;
use crate::robust::pearson;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_scores(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
}

fn sample_cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() as f64;
    let ca = a - DMatrix::from_fn(a.nrows(), a.ncols(), |_, j| a.column(j).mean());
    let cb = b - DMatrix::from_fn(b.nrows(), b.ncols(), |_, j| b.column(j).mean());
    ca.transpose() * cb / (n - 1.0)
}

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

#[test]
fn lx_pearson_is_squared_correlation() {
    let s = gaussian_scores(200, 3, 1);
    let (u1, u2) = (v(&[1.0, 0.5, 0.0]), v(&[0.0, 1.0, -1.0]));
    let p: Vec<f64> = (&s * &u1).iter().copied().collect();
    let q: Vec<f64> = (&s * &u2).iter().copied().collect();
    let m = lx_metric(&u1, &u2, &s, &AssociationSpec::CovPearson);
    assert!(!m.degenerate);
    assert!((m.value - pearson(&p, &q).powi(2)).abs() < 1e-12);
}

#[test]
fn lx_identical_directions_give_one() {
    let s = gaussian_scores(150, 4, 2);
    let u = v(&[0.3, -1.0, 0.2, 0.7]);
    for spec in [
        AssociationSpec::CovPearson,
        AssociationSpec::gk_bounded_mad(),
        AssociationSpec::m_scatter(),
    ] {
        let m = lx_metric(&u, &u, &s, &spec);
        assert!((m.value - 1.0).abs() < 1e-6, "{}: {}", spec.name(), m.value);
    }
}

#[test]
fn lx_symmetric_and_scale_invariant() {
    let s = gaussian_scores(300, 3, 3);
    let (u1, u2) = (v(&[1.0, 1.0, 0.0]), v(&[1.0, 0.0, 1.0]));
    for spec in [
        AssociationSpec::CovPearson,
        AssociationSpec::gk_bounded_mad(),
        AssociationSpec::ogk_mad(),
    ] {
        let a = lx_metric(&u1, &u2, &s, &spec).value;
        let b = lx_metric(&u2, &u1, &s, &spec).value;
        let c = lx_metric(&(&u1 * 3.0), &(&u2 * -0.2), &s, &spec).value;
        assert!((a - b).abs() < 1e-10, "{}", spec.name());
        assert!((a - c).abs() < 1e-10, "{}", spec.name());
        assert!((0.0..=1.0 + 1e-12).contains(&a));
    }
}

#[test]
fn lx_orthogonal_coordinates_near_zero() {
    let s = gaussian_scores(5000, 2, 4);
    let m = lx_metric(
        &v(&[1.0, 0.0]),
        &v(&[0.0, 1.0]),
        &s,
        &AssociationSpec::gk_bounded_mad(),
    );
    assert!(m.value < 0.01, "{}", m.value);
}

#[test]
fn lx_zero_projection_is_degenerate() {
    let s = gaussian_scores(50, 2, 5);
    let m = lx_metric(
        &v(&[0.0, 0.0]),
        &v(&[1.0, 0.0]),
        &s,
        &AssociationSpec::gk_bounded_mad(),
    );
    assert_eq!(
        m,
        MetricValue {
            value: 0.0,
            degenerate: true
        }
    );
}

#[test]
fn angle_in_weighted_metric() {
    let g = DMatrix::from_diagonal(&v(&[1.0, 4.0]));
    let a = v(&[1.0, 0.0]);
    let b = v(&[1.0, 1.0]);
    let expect = (1.0 / 5f64.sqrt()).acos().to_degrees();
    assert!((angle_metric(&a, &b, &g) - expect).abs() < 1e-10);
    assert!((angle_metric(&a, &(-&b), &g) - expect).abs() < 1e-10);
    assert!(angle_metric(&b, &(&b * 7.0), &g) < 1e-6);
    assert!((angle_metric(&a, &v(&[0.0, 1.0]), &g) - 90.0).abs() < 1e-10);
}

#[test]
fn discrepancy_zero_when_population_is_the_sample() {
    let x = gaussian_scores(100, 3, 6);
    let y = gaussian_scores(100, 3, 7) + &x * 0.5;
    let pop = PopulationScale {
        gamma11: sample_cov(&x, &x),
        gamma22: sample_cov(&y, &y),
        gamma12: sample_cov(&x, &y),
        c: 1.0,
    };
    let pen = DMatrix::identity(3, 3);
    let d = discrepancy_suprema(
        &x,
        &y,
        &AssociationSpec::CovPearson,
        0.3,
        &pen,
        &pop,
        25,
        &[],
        9,
    );
    assert_eq!(d.directions, 25);
    assert!(d.c_x < 1e-12 && d.c_y < 1e-12 && d.c_xy < 1e-12, "{d:?}");
}

#[test]
fn discrepancy_of_doubled_population_is_half() {
    let x = gaussian_scores(80, 2, 8);
    let y = gaussian_scores(80, 2, 9);
    let pop = PopulationScale {
        gamma11: sample_cov(&x, &x) * 2.0,
        gamma22: sample_cov(&y, &y) * 2.0,
        gamma12: sample_cov(&x, &y) * 2.0,
        c: 1.0,
    };
    let pen = DMatrix::zeros(2, 2);
    let d = discrepancy_suprema(
        &x,
        &y,
        &AssociationSpec::CovPearson,
        0.0,
        &pen,
        &pop,
        10,
        &[],
        1,
    );
    assert!((d.c_x - 0.5).abs() < 1e-12);
    assert!((d.c_y - 0.5).abs() < 1e-12);
}

#[test]
fn discrepancy_skips_unnormalizable_extras() {
    let x = gaussian_scores(60, 2, 10);
    let pop = PopulationScale {
        gamma11: DMatrix::identity(2, 2),
        gamma22: DMatrix::identity(2, 2),
        gamma12: DMatrix::zeros(2, 2),
        c: 1.0,
    };
    let pen = DMatrix::zeros(2, 2);
    let extra = [
        (v(&[0.0, 0.0]), v(&[1.0, 0.0])),
        (v(&[1.0, 0.0]), v(&[0.0, 1.0])),
    ];
    let d = discrepancy_suprema(
        &x,
        &x,
        &AssociationSpec::CovPearson,
        0.0,
        &pen,
        &pop,
        3,
        &extra,
        2,
    );
    assert_eq!(d.directions, 4);
    let again = discrepancy_suprema(
        &x,
        &x,
        &AssociationSpec::CovPearson,
        0.0,
        &pen,
        &pop,
        3,
        &extra,
        2,
    );
    assert_eq!(d, again);
}

#[test]
fn quantiles_interpolate() {
    let s = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(quantile(&s, 0.5), 2.5);
    assert_eq!(quantile(&s, 0.25), 1.75);
    assert_eq!(quantile(&s, 1.0), 4.0);
    assert_eq!(quantile(&[7.0], 0.3), 7.0);
    let st = SummaryStat::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
    assert_eq!(st.median, 2.5);
    assert_eq!(st.iqr, Some(1.5));
    assert_eq!(SummaryStat::of(&[5.0]).unwrap().iqr, None);
    assert!(SummaryStat::of(&[]).is_none());
}

fn row(regime: &str, n: usize, rep: usize, lx: Option<f64>, error: Option<&str>) -> ReportRow {
    ReportRow {
        regime: regime.into(),
        n,
        d: 5,
        tau: 0.1,
        spec: r#"{"kind":"cov_pearson"}"#.into(),
        replicate: rep,
        seed: rep as u64,
        lx,
        ly: lx,
        lx_degenerate: false,
        ly_degenerate: false,
        lambda_hat: lx,
        lambda_err: lx.map(|v| (v - 0.49).abs()),
        angle_x: Some(1.0),
        angle_y: Some(2.0),
        tau_psi_phi: 0.0,
        c_x: None,
        c_y: None,
        c_xy: None,
        error: error.map(String::from),
    }
}

#[test]
fn report_groups_cells_in_order() {
    let report = ConvergenceReport {
        rows: vec![
            row("sieve", 100, 0, Some(0.9), None),
            row("penalty", 100, 0, Some(0.8), None),
            row("sieve", 100, 1, None, Some("boom, bad")),
            row("sieve", 100, 2, Some(0.7), None),
        ],
    };
    let s = report.summaries();
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].regime, "sieve");
    assert_eq!(s[0].replicates, 3);
    assert_eq!(s[0].failures, 1);
    assert!((s[0].lx.unwrap().median - 0.8).abs() < 1e-12);
    assert_eq!(s[1].lx.unwrap().iqr, None);

    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains("\"boom, bad\""));
    let cols = csv.lines().next().unwrap().split(',').count();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    for rec in rdr.records() {
        assert_eq!(rec.unwrap().len(), cols);
    }
    assert_eq!(report.summary_csv().lines().count(), 3);
    let parsed: Vec<ReportSummary> = serde_json::from_str(&report.summary_json()).unwrap();
    assert_eq!(parsed, s);
}
