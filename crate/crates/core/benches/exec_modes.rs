use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ineqlab::chaos::{all_partition_norms, AmOptions, IndexedTensor};
use ineqlab::constants::{optimal_mlsi, OptimizerOptions};
use ineqlab::moments::{monte_carlo_tail_compare, McOptions};
use ineqlab::poisson::{poisson_moment_check, LibraryFunctional, PoissonMcOptions, Window};
use ineqlab::zoo::ModelSpec;
use ineqlab::ExecMode;
use rand::Rng;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn mlsi_multistart(c: &mut Criterion) {
    let kernel = ModelSpec::Interchange { n: 4 }.build_bundle().unwrap().kernel;
    let mut g = c.benchmark_group("mlsi_multistart");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = OptimizerOptions { starts: 16, exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| optimal_mlsi(black_box(&kernel), &opts).unwrap().value)
        });
    }
    g.finish();
}

fn mc_tail(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_tail");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = McOptions { samples: 200_000, exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let sum = |rng: &mut ineqlab::exec::Rng| (0..32).map(|_| rng.random_range(-1.0..1.0f64)).sum::<f64>();
                monte_carlo_tail_compare(sum, Some(0.0), |t| (-t * t / 64.0).exp(), &[2.0, 4.0, 8.0], &opts).unwrap()
            })
        });
    }
    g.finish();
}

fn am_multistart(c: &mut Criterion) {
    let a = IndexedTensor::gaussian(3, 8, 1, 0).unwrap();
    let mut g = c.benchmark_group("am_multistart");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = AmOptions { starts: 32, exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| all_partition_norms(black_box(&a), &opts).unwrap())
        });
    }
    g.finish();
}

fn poisson_moments(c: &mut Criterion) {
    let window = Window::unit_cube(2, 30.0).unwrap();
    let f = LibraryFunctional::GilbertEdges { radius: 0.1 };
    let mut g = c.benchmark_group("poisson_moments");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = PoissonMcOptions {
            mc: McOptions { samples: 5_000, exec, ..Default::default() },
            quadrature_points: 16,
            bootstrap: 50,
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| poisson_moment_check(&f, &window, &[2.0, 4.0], &opts).unwrap().passed)
        });
    }
    g.finish();
}

criterion_group!(benches, mlsi_multistart, mc_tail, am_multistart, poisson_moments);
criterion_main!(benches);
