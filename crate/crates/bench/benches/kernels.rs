use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use abcscore_core::models::normal_parabola::NpData;
use abcscore_core::models::{EquicorrModel, NormalParabola, ProbitModel, SmithModel};
use abcscore_core::numkernel::bvn_cdf;
use abcscore_core::samplers::{abc_reject, SummaryTarget};
use abcscore_core::{CompositeLikelihood, DistanceSpec, Model, RngStream};

const SMITH_THETA: [f64; 10] = [100.0, 30.0, 150.0, 30.0, 0.1, -0.05, 8.0, 0.02, 0.01, 0.3];

fn bench_bvn(c: &mut Criterion) {
    let mut g = c.benchmark_group("bvn_cdf");
    for &rho in &[0.3, 0.9, 0.999] {
        g.bench_function(format!("rho={rho}"), |b| {
            b.iter(|| bvn_cdf(black_box(0.4), black_box(-1.1), black_box(rho)))
        });
    }
    g.finish();
}

fn bench_pairwise(c: &mut Criterion) {
    let mut g = c.benchmark_group("pairwise_loglik");

    let probit = ProbitModel::random_design(30, 10, RngStream::new(1, 0)).unwrap();
    let theta = [0.5, 1.0, 0.0];
    let y = probit.simulate(&theta, &mut RngStream::new(1, 1).generator()).unwrap();
    g.bench_function("probit n=30 q=10", |b| b.iter(|| probit.logcl(black_box(&theta), &y)));

    let equicorr = EquicorrModel::new(30, 10).unwrap();
    let omega = equicorr.omega_from_natural(0.0, 1.0, 0.3).unwrap();
    let y = equicorr.simulate(&omega, &mut RngStream::new(2, 0).generator()).unwrap();
    g.bench_function("equicorr 30x10", |b| b.iter(|| equicorr.logcl(black_box(&omega), &y)));

    let smith = SmithModel::grid(4, 10.0, 50).unwrap();
    let y = smith.simulate(&SMITH_THETA, &mut RngStream::new(3, 0).generator()).unwrap();
    g.bench_function("smith 16 stations x 50 years", |b| {
        b.iter(|| smith.logcl(black_box(&SMITH_THETA), &y))
    });
    g.finish();
}

fn bench_smith_simulate(c: &mut Criterion) {
    let smith = SmithModel::grid(4, 10.0, 50).unwrap();
    let mut rng = RngStream::new(4, 0).generator();
    c.bench_function("smith simulate 16 stations x 50 years", |b| {
        b.iter(|| smith.simulate(black_box(&SMITH_THETA), &mut rng).unwrap())
    });
}

fn bench_abc_reject(c: &mut Criterion) {
    let model = NormalParabola::new(20, 15.0).unwrap();
    let mut g = c.benchmark_group("abc_reject");
    g.sample_size(10);
    g.bench_function("normal parabola 10k proposals", |b| {
        b.iter_batched(
            || {
                [SummaryTarget::new(
                    Box::new(|d: &NpData| Ok(vec![d.sum / d.n() as f64])),
                    DistanceSpec::l1(),
                    vec![25.0],
                )]
            },
            |targets| abc_reject(&model, &targets, 10_000, 0.01, RngStream::new(5, 0)).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, bench_bvn, bench_pairwise, bench_smith_simulate, bench_abc_reject);
criterion_main!(benches);
