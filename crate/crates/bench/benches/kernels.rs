use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use sublevel_bench::{quartic, superellipse};
use sublevel_core::fit::geometric_grid;
use sublevel_core::fourier::{indicator_ft_slice, surface_decay_sweep, Cutoff};
use sublevel_core::indices::SublevelOptions;
use sublevel_core::lattice::{count_lattice_points_with, CountPath};
use sublevel_core::oscint::OscOptions;
use sublevel_core::{Rational, SublevelSamples};

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice");
    let disk = superellipse(&[1, 1]);
    g.sample_size(10);
    for s in [256, 4096, 65536] {
        let s = Rational::from_integer(s);
        g.bench_with_input(BenchmarkId::new("exact", s), &s, |b, &s| {
            b.iter(|| count_lattice_points_with(&disk, black_box(s), CountPath::Exact).unwrap())
        });
    }
    for s in [64, 256] {
        let s = Rational::from_integer(s);
        g.bench_with_input(BenchmarkId::new("guarded", s), &s, |b, &s| {
            b.iter(|| count_lattice_points_with(&disk, black_box(s), CountPath::Guarded).unwrap())
        });
    }
    g.finish();
}

fn oscillatory(c: &mut Criterion) {
    let mut g = c.benchmark_group("indicator_transform");
    let d = superellipse(&[2, 1]);
    let opts = OscOptions::default();
    for t in [1e2, 1e4, 1e5] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| indicator_ft_slice(&d, &[0.0, 1.0], black_box(t), &opts).unwrap())
        });
    }
    g.finish();

    let chart = d.chart_at(&[0.0, 1.0]).unwrap();
    let cutoff = Cutoff::for_chart(&chart);
    let grid = geometric_grid(1e3, 1e6, 16);
    c.bench_function("surface_sweep_16", |b| {
        b.iter(|| surface_decay_sweep(&chart, &cutoff, &[0.0, 1.0], black_box(&grid)).unwrap())
    });
}

fn sublevel(c: &mut Criterion) {
    let f = quartic();
    let eps = geometric_grid(1e-8, 1e-3, 8);
    let opts = SublevelOptions { lines: 1 << 10, ..SublevelOptions::default() };
    let mut g = c.benchmark_group("sublevel");
    g.sample_size(10);
    g.bench_function("quartic_1024_lines", |b| {
        b.iter(|| SublevelSamples::measure(&f, "bench", 0.5, black_box(&eps), 1, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, lattice, oscillatory, sublevel);
criterion_main!(benches);
