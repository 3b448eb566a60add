use collector::lyapunov::{nu_direct, nu_gig_diagonal, DirectOptions};
use collector::optimize::{grid_search, GridOptions};
use collector::{BernSpec, EnvStream, Execution, GigSpec, Policy};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn grid(c: &mut Criterion) {
    let stream = EnvStream::bern(&BernSpec::new(0.3, 0.2, 2.0).unwrap(), 7).unwrap();
    let mut g = c.benchmark_group("grid_8x8");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = GridOptions {
            exec,
            ..GridOptions::new(&stream, 8, 1e-4)
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| grid_search(black_box(&stream), &opts).unwrap())
        });
    }
    g.finish();
}

fn direct(c: &mut Criterion) {
    let stream = EnvStream::bern(&BernSpec::new(0.3, 0.2, 2.0).unwrap(), 7).unwrap();
    let p = Policy::new(0.265, 0.284).unwrap();
    let mut g = c.benchmark_group("direct_16x50k");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = DirectOptions {
            replications: 16,
            exec,
            ..DirectOptions::fixed(50_000)
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| nu_direct(black_box(&p), &stream, &opts).unwrap())
        });
    }
    g.finish();
}

fn gig(c: &mut Criterion) {
    let spec = GigSpec::new(8.0, 8.0 / 0.69, 8.0 * 0.31 / 0.69).unwrap();
    let mut g = c.benchmark_group("gig_mc_200k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| nu_gig_diagonal(black_box(&spec), 0.69, 200_000, 11, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, grid, direct, gig);
criterion_main!(benches);
