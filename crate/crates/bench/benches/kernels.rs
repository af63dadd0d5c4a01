use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use simseg::correct::correct_all;
use simseg::detect::{detect, propose};
use simseg::metrics::{evaluate, EvalOptions};
use simseg::postprocess::{smooth, SmoothConfig};
use simseg::similarity::{dtw, kmeans, KMeansOptions};
use simseg::synth::perturb_boundaries;
use simseg::{CorrectionConfig, DetectConfig, Setting};
use simseg_bench::video;

fn bench_dtw(c: &mut Criterion) {
    let mut group = c.benchmark_group("dtw");
    for len in [4usize, 16, 64] {
        let (feat, _) = video(2, len, 64, 0.1);
        let a: Vec<&[f64]> = (0..len).map(|t| feat.row(t)).collect();
        let b: Vec<&[f64]> = (len..2 * len).map(|t| feat.row(t)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |bench, _| {
            bench.iter(|| dtw(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let (feat, _) = video(5, 200, 64, 0.05);
    c.bench_function("kmeans k=5 T=1000 D=64", |b| {
        b.iter(|| kmeans(black_box(feat.as_slice()), 64, 5, &KMeansOptions::seeded(0)).unwrap())
    });
}

fn bench_correct(c: &mut Criterion) {
    let (feat, labels) = video(10, 100, 64, 0.1);
    let shifted = perturb_boundaries(&labels, 6, 1).unwrap();
    let cfg = CorrectionConfig::default();
    c.bench_function("correct_all 10 segments", |b| {
        b.iter(|| correct_all(black_box(&feat), black_box(&shifted), &cfg).unwrap())
    });
}

fn bench_detect(c: &mut Criterion) {
    let (feat, _) = video(5, 200, 64, 0.05);
    let cfg = DetectConfig::new(5, Setting::Fixed(100));
    c.bench_function("detect T=1000 D=64", |b| {
        b.iter(|| detect(black_box(&feat), &cfg).unwrap())
    });

    // the threshold sweep reuses one set of proposals
    let raw = propose(&feat, &cfg).unwrap();
    c.bench_function("resolve sweep 10 thresholds", |b| {
        b.iter(|| {
            for t in (20..=200).step_by(20) {
                black_box(raw.resolve(Setting::Fixed(t)));
            }
        })
    });
}

fn bench_postprocess(c: &mut Criterion) {
    let (_, labels) = video(20, 500, 4, 0.0);
    let shifted = perturb_boundaries(&labels, 40, 2).unwrap();
    c.bench_function("smooth T=10000", |b| {
        b.iter(|| smooth(black_box(&shifted), &SmoothConfig::fixed(80)).unwrap())
    });
    c.bench_function("evaluate T=10000", |b| {
        b.iter(|| {
            evaluate(
                black_box(&shifted),
                black_box(&labels),
                &EvalOptions::default(),
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_dtw,
    bench_kmeans,
    bench_correct,
    bench_detect,
    bench_postprocess
);
criterion_main!(benches);
