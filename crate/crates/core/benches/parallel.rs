use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use current_reps::currents::{random_current, BaseMeasure, Current};
use current_reps::geometry::{random_ball, BallPoint};
use current_reps::intmodel::{self, CoherentLabel, IntLabel};
use current_reps::lebesgue::{self, SamplerConfig};
use current_reps::rng;
use current_reps::specrep::Sign;
use current_reps::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn laplace_mc(c: &mut Criterion) {
    let f = Current::new(vec![0.0, 0.3, 0.7, 1.0], vec![0.9, 2.0, 1.4]).unwrap();
    let cfg = SamplerConfig::new(1.0, 1e-6, 20_000, 7).unwrap();
    let mut group = c.benchmark_group("laplace_mc");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| lebesgue::laplace_mc(&f, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn gram_panel(c: &mut Criterion) {
    let mut r = rng::stream(11, 0);
    let labels: Vec<IntLabel<BallPoint>> = (0..12)
        .map(|_| IntLabel::Coherent(CoherentLabel::new(Sign::Plus, random_current(3, &mut r, |r| random_ball(2, r)))))
        .collect();
    let m = BaseMeasure::default();
    let mut group = c.benchmark_group("int_gram_12");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| intmodel::gram_matrix(&labels, &m, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, laplace_mc, gram_panel);
criterion_main!(benches);
