use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sicshadow::estimators::PurityTracker;
use sicshadow::reconstruct::{self, MleOptions};
use sicshadow::shadows::ShadowAccumulator;
use sicshadow::SicFrame;
use sicshadow_bench::{frequencies, shots};

const SHOTS: u64 = 2000;

fn shadow_mean(c: &mut Criterion) {
    let frame = SicFrame::standard();
    let mut g = c.benchmark_group("shadow_mean");
    g.throughput(Throughput::Elements(SHOTS));
    for n in 2..=6 {
        let data = shots(n, SHOTS);
        let all: Vec<usize> = (0..n).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| {
                let mut acc = ShadowAccumulator::new(&frame, &all, n).unwrap();
                data.iter().for_each(|s| acc.add(s));
                acc.mean().unwrap()
            })
        });
    }
    g.finish();
}

fn purity_tracker(c: &mut Criterion) {
    let frame = SicFrame::standard();
    let data = shots(8, SHOTS);
    let mut g = c.benchmark_group("purity_tracker");
    g.throughput(Throughput::Elements(SHOTS));
    for k in 1..=4 {
        let subset: Vec<usize> = (0..k).collect();
        g.bench_with_input(BenchmarkId::new("subset", k), &subset, |b, subset| {
            b.iter(|| {
                let mut t = PurityTracker::new(&frame, subset, 8, 1).unwrap();
                data.iter().for_each(|s| t.add(s));
                t.estimate().unwrap()
            })
        });
    }
    g.finish();
}

fn reconstruction(c: &mut Criterion) {
    let mut g = c.benchmark_group("reconstruction");
    g.sample_size(10);
    for n in 2..=4 {
        let f = frequencies(n, SHOTS);
        g.bench_with_input(BenchmarkId::new("lininv", n), &f, |b, f| b.iter(|| reconstruct::lininv(f).unwrap()));
        g.bench_with_input(BenchmarkId::new("lininv_dense", n), &f, |b, f| {
            b.iter(|| reconstruct::lininv_dense(f).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pls", n), &f, |b, f| b.iter(|| reconstruct::pls_result(f).unwrap()));
    }
    for n in 2..=3 {
        let f = frequencies(n, SHOTS);
        g.bench_with_input(BenchmarkId::new("mle", n), &f, |b, f| {
            b.iter(|| reconstruct::mle(f, &MleOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, shadow_mean, purity_tracker, reconstruction);
criterion_main!(benches);
