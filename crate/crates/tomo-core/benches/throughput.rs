//! Throughput comparison of the data-parallel kernels.
//!
//! With the default `parallel` feature each case runs twice: on the default
//! rayon pool and on a one-thread pool, making the parallel speedup (or the
//! scheduling overhead on small inputs) directly visible. Built with
//! `--no-default-features` the same cases time the sequential fallback, so
//! the suite works under either configuration:
//!
//! ```text
//! cargo bench -p tomo-core
//! cargo bench -p tomo-core --no-default-features
//! ```

use std::hint::black_box;
use std::time::Duration;

use criterion::measurement::WallTime;
use criterion::{criterion_group, criterion_main, BenchmarkGroup, Criterion};

use tomo_core::framelet::{decompose, reconstruct, BankKind, FilterBank};
use tomo_core::geometry::{singular_direction_fraction, Cylinder, FractionConfig};
use tomo_core::noise::{add_poisson, NoiseSpec};
use tomo_core::optimizer::{denoise_tv, SolverConfig};
use tomo_core::phantom::shepp_logan;
use tomo_core::projector::{analytic_parallel_sinogram, parallel_project, ParallelGeometry};

fn configure(group: &mut BenchmarkGroup<'_, WallTime>) {
    group.sample_size(10);
    group.warm_up_time(Duration::from_millis(300));
    group.measurement_time(Duration::from_secs(2));
}

/// Times `f` on every execution backend the build supports.
fn bench_case(c: &mut Criterion, name: &str, mut f: impl FnMut() + Send) {
    let mut group = c.benchmark_group(name);
    configure(&mut group);
    #[cfg(feature = "parallel")]
    {
        group.bench_function("rayon-default", |b| b.iter(&mut f));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("single-thread pool");
        group.bench_function("rayon-1-thread", |b| pool.install(|| b.iter(&mut f)));
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| b.iter(&mut f));
    group.finish();
}

fn throughput(c: &mut Criterion) {
    let phantom = shepp_logan();

    let raster = phantom.rasterize(128, 128).expect("raster");
    let geom = ParallelGeometry::covering(90, 129, phantom.support_radius()).expect("geometry");
    bench_case(c, "project_90x129_from_128sq", || {
        black_box(parallel_project(&raster, &geom).expect("projection"));
    });

    let image = phantom.rasterize(256, 256).expect("raster");
    let bank = FilterBank::new(BankKind::Cubic);
    bench_case(c, "framelet_round_trip_cubic_l2_256sq", || {
        let coeffs = decompose(&image, &bank, 2).expect("decompose");
        black_box(reconstruct(&coeffs, &bank).expect("reconstruct"));
    });

    let clean = analytic_parallel_sinogram(&phantom, &geom).expect("sinogram");
    let spec = NoiseSpec::new(128.0, 0).expect("noise spec");
    let counts = add_poisson(&clean.data, &spec).expect("noise").scaled(128.0);
    let solver = SolverConfig {
        max_iters: 20,
        rel_tol: 1e-12,
        ..SolverConfig::default()
    };
    bench_case(c, "tv_denoise_20_iters_90x129", || {
        black_box(denoise_tv(&counts, &solver).expect("solve"));
    });

    let cfg = FractionConfig {
        n_directions: 400,
        surface_grid: 24,
        ..FractionConfig::default()
    };
    bench_case(c, "cylinder_fraction_400_dirs", || {
        black_box(singular_direction_fraction(&Cylinder, 0.05, &cfg).expect("fraction"));
    });
}

criterion_group!(benches, throughput);
criterion_main!(benches);
