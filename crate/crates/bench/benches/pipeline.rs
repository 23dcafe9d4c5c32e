// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use meshchroma::amr::RefinedMesh;
use meshchroma::io::{parse_native, to_native_string};
use meshchroma::race::{payload, sweep_buffered, sweep_colored, sweep_sequential, SweepOptions};
use meshchroma::reorder::{apply_plan, build_plan, coalescing_metric};
use meshchroma::{color, ColoringConfig, Family, GeneratorSpec, MeshDocument};

fn pipeline(c: &mut Criterion) {
    let mesh = GeneratorSpec {
        shuffle: Some(0),
        ..GeneratorSpec::uniform(Family::TriRect, 128)
    }
    .generate()
    .unwrap();
    let (coloring, _) = color(&mesh, &ColoringConfig::with_seed(0)).unwrap();
    let plan = build_plan(&mesh, &coloring).unwrap();
    let (rmesh, rcoloring) = apply_plan(&mesh, &coloring, &plan).unwrap();
    let f = payload(&mesh, 0);
    let rf = payload(&rmesh, 0);
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let opts = SweepOptions {
        workers,
        detect_conflicts: false,
    };

    let mut g = c.benchmark_group("reorder");
    g.sample_size(20);
    g.bench_function("build_plan", |b| {
        b.iter(|| build_plan(black_box(&mesh), &coloring).unwrap())
    });
    g.bench_function("apply_plan", |b| {
        b.iter(|| apply_plan(&mesh, &coloring, black_box(&plan)).unwrap())
    });
    g.bench_function("coalescing_metric", |b| {
        b.iter(|| coalescing_metric(black_box(&rmesh), &rcoloring))
    });
    g.finish();

    let mut g = c.benchmark_group("sweep");
    g.sample_size(20);
    g.throughput(Throughput::Elements(mesh.surface_count() as u64));
    g.bench_function("sequential", |b| {
        b.iter(|| sweep_sequential(&mesh, black_box(&f)).unwrap())
    });
    g.bench_function("colored", |b| {
        b.iter(|| sweep_colored(&mesh, &coloring, black_box(&f), opts).unwrap())
    });
    g.bench_function("colored_reordered", |b| {
        b.iter(|| sweep_colored(&rmesh, &rcoloring, black_box(&rf), opts).unwrap())
    });
    g.bench_function("buffered", |b| {
        b.iter(|| sweep_buffered(&mesh, black_box(&f), workers).unwrap())
    });
    g.finish();

    let mut g = c.benchmark_group("amr");
    g.sample_size(10);
    let base = RefinedMesh::from_base(&mesh, &coloring).unwrap();
    let half: Vec<usize> = (0..mesh.element_count()).step_by(2).collect();
    let refined = base.refine(&half).unwrap();
    g.bench_function("refine_half", |b| {
        b.iter(|| base.refine(black_box(&half)).unwrap())
    });
    g.bench_function("coarsen_half", |b| {
        b.iter(|| refined.coarsen(black_box(&half)).unwrap())
    });
    g.finish();

    let mut g = c.benchmark_group("io");
    g.sample_size(10);
    let doc = MeshDocument {
        plan: Some(plan.clone()),
        ..MeshDocument::colored(mesh.clone(), coloring.clone())
    };
    let text = to_native_string(&doc).unwrap();
    g.bench_function("write_native", |b| {
        b.iter(|| to_native_string(black_box(&doc)).unwrap())
    });
    g.bench_function("read_native", |b| {
        b.iter(|| parse_native(black_box(&text)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
