use chainsentry::collab::average_flat;
use chainsentry_bench::{model, node_data};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use ndarray::ArrayView1;

fn predict(c: &mut Criterion) {
    let data = node_data(5).unwrap();
    let m = model(&data, &[16, 8], 6).unwrap();
    let mut group = c.benchmark_group("inference");
    group.throughput(Throughput::Elements(data.len() as u64));
    group.bench_function("predict_node", |b| {
        b.iter(|| {
            for s in data.samples() {
                black_box(m.predict(ArrayView1::from(&s.features)).unwrap());
            }
        })
    });
    group.finish();
}

fn averaging(c: &mut Criterion) {
    let flats: Vec<Vec<f64>> = (0..3)
        .map(|k| (0..10_000).map(|i| ((i * (k + 1)) as f64).cos()).collect())
        .collect();
    let views: Vec<&[f64]> = flats.iter().map(Vec::as_slice).collect();
    c.bench_function("average_3x10k", |b| b.iter(|| average_flat(black_box(&views)).unwrap()));
}

criterion_group!(benches, predict, averaging);
criterion_main!(benches);
