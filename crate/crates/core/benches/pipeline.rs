//! Parallel vs sequential throughput of the heavy stages.
//!
//! Each benchmark runs once inside a one-thread pool and once on the default
//! pool. Build with `--no-default-features` to time the plain sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use densityseg::segment::{morph_close, morph_open};
use densityseg::{
    bank_response, clahe, convolve2d, make_bank, par, segment_dense, BinaryMask, Border,
    ClaheConfig, FloatRaster, GaborParams, GrayImage, SegmentConfig,
};

fn scene(n: usize) -> (GrayImage, BinaryMask) {
    let c = (n as f64 - 1.0) / 2.0;
    let dist = |r: usize, col: usize| ((r as f64 - c).powi(2) + (col as f64 - c).powi(2)).sqrt();
    let region = BinaryMask::from_fn(n, n, |r, col| dist(r, col) <= 0.47 * n as f64);
    let image = GrayImage::from_fn(n, n, 8, |r, col| {
        if !region.get(r, col) {
            0
        } else if (r + 2 * col) % 37 < 2 {
            220
        } else if dist(r, col) < 0.2 * n as f64 {
            200
        } else {
            100 + ((r * 31 + col * 17) % 23) as u16
        }
    })
    .unwrap();
    (image, region)
}

const POOLS: [(&str, usize); 2] = [("1-thread", 1), ("default", 0)];

fn bench_convolve(c: &mut Criterion) {
    let (image, _) = scene(512);
    let raster = FloatRaster::from(&image);
    let kernel = make_bank(&GaborParams::for_kernel_size(31), 1, 31)
        .unwrap()
        .kernels()[0]
        .real_kernel();
    let mut g = c.benchmark_group("convolve2d_512_k31");
    for (name, threads) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::with_threads(threads, || {
                b.iter(|| convolve2d(black_box(&raster), &kernel, Border::Replicate))
            })
        });
    }
    g.finish();
}

fn bench_bank(c: &mut Criterion) {
    let (image, _) = scene(256);
    let bank = make_bank(&GaborParams::for_kernel_size(25), 8, 25).unwrap();
    let mut g = c.benchmark_group("bank_response_256_k25_n8");
    g.sample_size(20);
    for (name, threads) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::with_threads(threads, || {
                b.iter(|| bank_response(black_box(&image), &bank))
            })
        });
    }
    g.finish();
}

fn bench_clahe(c: &mut Criterion) {
    let (image, _) = scene(1024);
    let cfg = ClaheConfig::default();
    let mut g = c.benchmark_group("clahe_1024");
    for (name, threads) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::with_threads(threads, || b.iter(|| clahe(black_box(&image), &cfg)))
        });
    }
    g.finish();
}

fn bench_morphology(c: &mut Criterion) {
    let (image, _) = scene(1024);
    let mask = BinaryMask::from_fn(1024, 1024, |r, col| image.get(r, col) >= 150);
    let mut g = c.benchmark_group("open_close_1024_r3");
    for (name, threads) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::with_threads(threads, || {
                b.iter(|| morph_close(&morph_open(black_box(&mask), 3), 3))
            })
        });
    }
    g.finish();
}

fn bench_segment(c: &mut Criterion) {
    let (image, region) = scene(256);
    let bank = make_bank(&GaborParams::for_kernel_size(25), 8, 25).unwrap();
    let (clahe_cfg, cfg) = (ClaheConfig::default(), SegmentConfig::default());
    let mut g = c.benchmark_group("segment_dense_256");
    g.sample_size(10);
    for (name, threads) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::with_threads(threads, || {
                b.iter(|| segment_dense(black_box(&image), &region, &bank, &clahe_cfg, &cfg))
            })
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_convolve,
    bench_bank,
    bench_clahe,
    bench_morphology,
    bench_segment
);
criterion_main!(benches);
