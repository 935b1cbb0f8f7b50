use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nlslab_bench::{coarse_ground_state, two_bubble_constants, two_bubble_field};
use nlslab_core::field::Spectral;
use nlslab_core::modulation_fit;
use nlslab_core::pde::{self, Splitting, Stepper};
use nlslab_core::reduced_ode::{self, ShootingConfig};
use nlslab_core::ParamState;
use std::hint::black_box;

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft2");
    for n in [128, 256, 512] {
        let spectral = Spectral::new(n, 20.0);
        let mut u = pde::gaussian(n, 20.0, 1.0, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                spectral.fft().forward(u.data_mut());
                spectral.fft().inverse(u.data_mut());
            })
        });
    }
    group.finish();
}

fn split_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_step_256");
    for splitting in [Splitting::Strang, Splitting::Fourth] {
        let stepper = Stepper::with_splitting(256, 20.0, 1e-3, splitting);
        let mut u = pde::gaussian(256, 20.0, 1.5, 1.0).unwrap();
        group.bench_function(format!("{splitting:?}"), |b| b.iter(|| stepper.step(black_box(&mut u))));
    }
    group.finish();
}

fn ground_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_state");
    group.sample_size(10);
    group.bench_function("spacing_0.02", |b| b.iter(coarse_ground_state));
    group.finish();
}

fn shooting(c: &mut Criterion) {
    let gs = coarse_ground_state();
    let consts = two_bubble_constants(&gs);
    let cfg = ShootingConfig::new(1e4, 1e3, 1e-10);
    let mut group = c.benchmark_group("reduced_ode");
    group.sample_size(10);
    group.bench_function("shoot_1e4_1e3", |b| b.iter(|| reduced_ode::shoot(black_box(&cfg), &consts).unwrap()));
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let gs = coarse_ground_state();
    let consts = two_bubble_constants(&gs);
    let (u, p) = two_bubble_field(&gs, &consts, 256);
    let guess = ParamState::new(p.lambda * 1.001, p.z + 0.02, p.gamma, 1e-4, p.b * 1.05);
    let mut group = c.benchmark_group("decompose");
    group.sample_size(10);
    group.bench_function("n256", |b| b.iter(|| modulation_fit::decompose(&u, &gs, &consts, &guess, 1e-10, 0.3).unwrap()));
    group.finish();
}

criterion_group!(kernels, fft, split_step, ground_state, shooting, decomposition);
criterion_main!(kernels);
