use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use i2e_core::formats::{self, FileMeta};
use i2e_core::{convert, synth, ConversionConfig};
use std::hint::black_box;

fn encode_decode(c: &mut Criterion) {
    let img = synth::natural(224, 224, 11);
    let vol = convert(&img, &ConversionConfig::default()).unwrap();
    let meta = FileMeta::default();
    let dense = formats::encode_dense(&vol, &meta).unwrap();
    let sparse = formats::encode_sparse(&vol, &meta).unwrap();

    let mut group = c.benchmark_group("formats");
    group.throughput(Throughput::Elements(vol.len() as u64));
    group.bench_function("encode_dense", |b| {
        b.iter(|| formats::encode_dense(black_box(&vol), &meta).unwrap())
    });
    group.bench_function("decode_dense", |b| {
        b.iter(|| formats::decode_dense(black_box(&dense)).unwrap())
    });
    group.bench_function("encode_sparse", |b| {
        b.iter(|| formats::encode_sparse(black_box(&vol), &meta).unwrap())
    });
    group.bench_function("decode_sparse", |b| {
        b.iter(|| formats::decode_sparse(black_box(&sparse)).unwrap())
    });
    group.bench_function("dense_to_sparse", |b| {
        b.iter(|| formats::dense_to_sparse(black_box(&dense)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, encode_decode);
criterion_main!(benches);
