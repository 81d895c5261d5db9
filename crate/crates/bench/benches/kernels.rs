use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use medstyle_core::eval::{bleu4, train_lm, LmParams};
use medstyle_core::mining::{knn, mine_pairs, toy_embed, MarginParams};
use medstyle_core::term_graph::levenshtein;

fn bench_knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    for n in [500, 2000] {
        let (e, l) = medstyle_bench::embeddings(n, 128);
        group.throughput(Throughput::Elements((n * n) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| knn(black_box(&e), black_box(&l), 4).unwrap())
        });
    }
    group.finish();
}

fn bench_mining(c: &mut Criterion) {
    let mut group = c.benchmark_group("mine_pairs");
    group.sample_size(10);
    for n in [500, 2000] {
        let (e, l) = medstyle_bench::embeddings(n, 128);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| mine_pairs(black_box(&e), black_box(&l), &MarginParams::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_toy_embed(c: &mut Criterion) {
    let corpus = medstyle_bench::corpus(2000);
    c.bench_function("toy_embed/2000", |b| b.iter(|| toy_embed(black_box(&corpus), 128, 0).unwrap()));
}

fn bench_levenshtein(c: &mut Criterion) {
    let pairs = [
        ("fever", "pyrexia"),
        ("myocardial infarction", "heart attack"),
        ("gastroesophageal reflux disease", "heartburn and acid indigestion"),
    ];
    let mut group = c.benchmark_group("levenshtein");
    for (a, b) in pairs {
        group.bench_with_input(BenchmarkId::from_parameter(a.len() + b.len()), &(a, b), |bench, (a, b)| {
            bench.iter(|| levenshtein(black_box(a), black_box(b)))
        });
    }
    group.finish();
}

fn bench_bleu(c: &mut Criterion) {
    let (hyps, refs) = medstyle_bench::sentence_pairs(2000);
    c.bench_function("bleu4/2000", |b| b.iter(|| bleu4(black_box(&hyps), black_box(&refs)).unwrap()));
}

fn bench_lm(c: &mut Criterion) {
    let (train, test) = medstyle_bench::sentence_pairs(2000);
    let mut group = c.benchmark_group("kneser_ney");
    group.sample_size(10);
    group.bench_function("train/2000", |b| b.iter(|| train_lm(black_box(&train), LmParams::default()).unwrap()));
    let lm = train_lm(&train, LmParams::default()).unwrap();
    group.bench_function("perplexity/2000", |b| b.iter(|| lm.perplexity(black_box(&test)).unwrap()));
    group.finish();
}

criterion_group!(mining, bench_knn, bench_mining, bench_toy_embed);
criterion_group!(text, bench_levenshtein, bench_bleu, bench_lm);
criterion_main!(mining, text);
