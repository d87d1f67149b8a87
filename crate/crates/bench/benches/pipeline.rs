use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tlexplain_bench::{bundled_corpus, bundled_space};
use tlexplain_core::evidence::{narrators, EvidenceParams};
use tlexplain_core::mining::{mine_roots, MiningParams};
use tlexplain_core::search::{core_context_search, SearchConfig, SyncClusters};

fn reasoner(c: &mut Criterion) {
    let corpus = bundled_corpus();
    c.bench_function("materialize/mini-flights", |b| {
        b.iter_batched(
            || corpus.domains.clone(),
            |mut ds| {
                for d in &mut ds {
                    d.materialize();
                }
                black_box(ds)
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

fn mining(c: &mut Criterion) {
    let corpus = bundled_corpus();
    let mut g = c.benchmark_group("mine-roots");
    for (name, params) in MiningParams::regimes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &params, |b, p| {
            b.iter(|| {
                for d in &corpus.domains {
                    black_box(mine_roots(d, p).unwrap());
                }
            })
        });
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let space = bundled_space();
    let clusters = SyncClusters::from_space(&space);
    c.bench_function("narrators", |b| {
        b.iter(|| black_box(narrators(&space, &EvidenceParams::default())))
    });
    let mut g = c.benchmark_group("context-search");
    for max_dim in 2..=4 {
        let cfg = SearchConfig {
            max_dim,
            ..SearchConfig::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(max_dim), &cfg, |b, cfg| {
            b.iter(|| black_box(core_context_search(&space, &clusters, cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, reasoner, mining, search);
criterion_main!(benches);
