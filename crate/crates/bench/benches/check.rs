// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use exmm::harness::run_suite;
use exmm::{check, CheckOptions, ModelConfig, Relation};
use exmm_bench::{corpus_dir, corpus_test};

fn single_tests(c: &mut Criterion) {
    let mut g = c.benchmark_group("check");
    for stem in [
        "MP+dmb+addr",
        "MP+dmb+ctrl-rfisvceret-addr",
        "MPviaSGIEIOmode1sequence",
        "IRIWforSGIs",
        "SBVerona",
    ] {
        let t = corpus_test(stem);
        let cfg = ModelConfig::default();
        g.bench_with_input(BenchmarkId::from_parameter(stem), &t, |b, t| {
            b.iter(|| check(black_box(t), &cfg, &CheckOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn closure(c: &mut Criterion) {
    let mut g = c.benchmark_group("transitive_closure");
    for n in [32usize, 64, 128] {
        // A sparse pseudo-random graph, fixed across runs.
        let mut x = 0x9e37_79b9_7f4a_7c15u64;
        let mut pairs = Vec::new();
        for _ in 0..2 * n {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            pairs.push(((x % n as u64) as usize, ((x >> 32) % n as u64) as usize));
        }
        let r = Relation::from_pairs(n, pairs);
        g.bench_with_input(BenchmarkId::from_parameter(n), &r, |b, r| {
            b.iter(|| black_box(r).transitive_closure())
        });
    }
    g.finish();
}

fn suite(c: &mut Criterion) {
    let configs: Vec<ModelConfig> = ["default", "sea_r", "sea_w", "sea_rw", "exs"]
        .iter()
        .map(|v| ModelConfig::from_variant(v).unwrap())
        .collect();
    let mut g = c.benchmark_group("suite");
    g.sample_size(10);
    g.bench_function("corpus x 5 variants", |b| {
        b.iter(|| run_suite(&corpus_dir(), &configs, 1, &CheckOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, single_tests, closure, suite);
criterion_main!(benches);
