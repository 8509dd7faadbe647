use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortlab_core::grid_spectral::random::random_band_limited;
use vortlab_core::grid_spectral::{curl, inverse_transform, project_curl, transform, GridSpec};
use vortlab_core::ns_solver::{run, taylor_green_init, SolverConfig};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for n in [16, 32, 64] {
        let spec = GridSpec::periodic(n).unwrap();
        let u = random_band_limited(spec, 3, n / 4, &mut ChaCha8Rng::seed_from_u64(1));
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| inverse_transform(&transform(u))));
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let spec = GridSpec::periodic(32).unwrap();
    let u = random_band_limited(spec, 3, 8, &mut ChaCha8Rng::seed_from_u64(2));
    c.bench_function("curl_n32", |b| b.iter(|| curl(&u).unwrap()));
    c.bench_function("leray_projection_n32", |b| b.iter(|| project_curl(&u).unwrap()));
}

fn solver(c: &mut Criterion) {
    let spec = GridSpec::periodic(32).unwrap();
    let u0 = taylor_green_init(spec, 1.0);
    let cfg = SolverConfig::new(spec, 1e-3, 1e-2);
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("taylor_green_n32_10_steps", |b| b.iter(|| run(&cfg, &u0).unwrap()));
    group.finish();
}

criterion_group!(benches, transforms, operators, solver);
criterion_main!(benches);
