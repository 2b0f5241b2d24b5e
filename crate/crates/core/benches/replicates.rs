use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scca::experiments::{run_consistency, ConsistencyConfig, ModelConfig, Regime};
use scca::scca::RobustOptions;
use scca::{
    fit_robust, AssociationSpec, BasisKind, BasisSystem, Execution, Grid, ObjectiveContext,
    SmoothingParams,
};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("consistency_replicates");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = ConsistencyConfig {
            ns: vec![100],
            replicates: 8,
            regimes: vec![Regime::PenaltyOnly { d: 9 }],
            discrepancy_dirs: 5,
            execution,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| black_box(run_consistency(cfg).unwrap()))
        });
    }
    group.finish();
}

fn restarts(c: &mut Criterion) {
    let model = ModelConfig::default().build().unwrap();
    let grid = Grid::uniform(model.domain.0, model.domain.1, 101).unwrap();
    let (x, y) = model.sample_pair(200, &grid, 7).unwrap();
    let basis = BasisSystem::new(BasisKind::Fourier, 9, &grid).unwrap();
    let ctx = ObjectiveContext::from_samples(
        &x,
        &y,
        &basis,
        AssociationSpec::gk_bounded_mad(),
        SmoothingParams::common(0.17, 9),
    )
    .unwrap();

    let mut group = c.benchmark_group("robust_fit_restarts");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = RobustOptions {
            random_starts: 10,
            execution,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(fit_robust(&ctx, opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, replicates, restarts);
criterion_main!(benches);
