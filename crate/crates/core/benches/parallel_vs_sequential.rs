use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use klein_core::bandstructure::{band_scan, uniform_grid, DEFAULT_N_CUT};
use klein_core::experiments::{phase_sweep, ScenarioConfig};
use klein_core::{Execution, LatticeParams};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn bench_band_scan(c: &mut Criterion) {
    let lat = LatticeParams::experiment(std::f64::consts::PI);
    let qs = uniform_grid(-1.0, 1.0, 401);
    let mut group = c.benchmark_group("band_scan");
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| band_scan(&lat, &qs, 4, DEFAULT_N_CUT, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_phase_sweep(c: &mut Criterion) {
    // short, coarse runs so one sample stays well under a second
    let cfg = ScenarioConfig {
        n_points: Some(1024),
        z_min: -400.0,
        z_max: 800.0,
        dt: 2e-3,
        total_time: 4.0,
        ..ScenarioConfig::default()
    };
    let phis = [2.6, 2.9, 3.2, 3.5];
    let mut group = c.benchmark_group("phase_sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| phase_sweep(&cfg, &phis, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_band_scan, bench_phase_sweep);
criterion_main!(benches);
