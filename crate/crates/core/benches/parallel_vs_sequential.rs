use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use coordlab::aggregation::{check_axioms, AggregationRule};
use coordlab::bounds::CoordinationParams;
use coordlab::findability::{cascade_many, Lattice, SolutionKind};
use coordlab::hierarchy::optimal_group_count_with;
use coordlab::Execution;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn group_count(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimal_group_count");
    let p = CoordinationParams::new(200_000, 3, 100.0, 0.5, 0.01).unwrap();
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| optimal_group_count_with(&p, 3, mode).unwrap())
        });
    }
    g.finish();
}

fn axioms(c: &mut Criterion) {
    let mut g = c.benchmark_group("check_axioms_4x4");
    g.sample_size(10);
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| check_axioms(AggregationRule::Borda, 4, 4, mode).unwrap())
        });
    }
    g.finish();
}

fn cascades(c: &mut Criterion) {
    let mut g = c.benchmark_group("cascade_batch");
    let jobs: Vec<_> = (0..64)
        .map(|i| {
            let kind = if i % 2 == 0 {
                SolutionKind::Findable
            } else {
                SolutionKind::Accurate
            };
            (Lattice::figure_fixture(), kind, vec![(i % 16, i % 16)])
        })
        .collect();
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| cascade_many(&jobs, mode))
        });
    }
    g.finish();
}

criterion_group!(benches, group_count, axioms, cascades);
criterion_main!(benches);
