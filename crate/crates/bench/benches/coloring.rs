// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use meshchroma::coloring::{first_fit, modified_greedy, resolve_conflicts};
use meshchroma::{color, ColoringConfig, Family, GeneratorSpec};

fn sizes(family: Family) -> &'static [usize] {
    match family {
        Family::TetPrism => &[6, 12, 20],
        _ => &[32, 96, 256],
    }
}

fn full_coloring(c: &mut Criterion) {
    let mut g = c.benchmark_group("color");
    g.sample_size(10);
    for family in [Family::TriRect, Family::QuadRect, Family::TetPrism] {
        for &n in sizes(family) {
            let mesh = GeneratorSpec {
                shuffle: Some(0),
                ..GeneratorSpec::uniform(family, n)
            }
            .generate()
            .unwrap();
            g.throughput(Throughput::Elements(mesh.surface_count() as u64));
            g.bench_with_input(
                BenchmarkId::new(family.name(), mesh.surface_count()),
                &mesh,
                |b, m| b.iter(|| color(black_box(m), &ColoringConfig::with_seed(0)).unwrap()),
            );
        }
    }
    g.finish();
}

fn stages(c: &mut Criterion) {
    let mesh = GeneratorSpec {
        shuffle: Some(0),
        ..GeneratorSpec::uniform(Family::TriRect, 192)
    }
    .generate()
    .unwrap();
    let config = ColoringConfig::with_seed(0);
    let greedy = modified_greedy(&mesh, &config);

    let mut g = c.benchmark_group("stages");
    g.sample_size(10);
    g.throughput(Throughput::Elements(mesh.surface_count() as u64));
    g.bench_function("modified_greedy", |b| {
        b.iter(|| modified_greedy(black_box(&mesh), &config))
    });
    g.bench_function("resolve", |b| {
        b.iter(|| resolve_conflicts(&mesh, greedy.clone(), &config).unwrap())
    });
    g.bench_function("first_fit", |b| b.iter(|| first_fit(black_box(&mesh))));
    g.finish();
}

criterion_group!(benches, full_coloring, stages);
criterion_main!(benches);
