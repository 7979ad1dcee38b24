use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tieprobe::embed::{random_walks, train_skipgram, SkipGramConfig, WalkConfig, WalkGraph};
use tieprobe::evaluate::auc;
use tieprobe::experiment::{Experiment, ExperimentConfig};
use tieprobe::features::hashtag_table;
use tieprobe::forest::{Forest, ForestConfig};
use tieprobe::synth::{generate, SynthConfig};

fn bench_auc(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let scores: Vec<f64> = (0..10_000).map(|_| (rng.random::<f64>() * 100.0).round()).collect();
    c.bench_function("auc_10k_with_ties", |b| b.iter(|| auc(black_box(&labels), black_box(&scores)).unwrap()));
}

fn bench_forest(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..800).map(|_| (0..10).map(|_| rng.random()).collect()).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * r[1] > 0.6).collect();
    let x: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let cfg = ForestConfig::default();
    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.bench_function("fit_800x10_100_trees", |b| b.iter(|| Forest::fit(&x, &labels, &cfg, 3).unwrap()));
    group.finish();
}

fn bench_hashtag_features(c: &mut Criterion) {
    let synth = SynthConfig {
        n_users: 120,
        n_communities: 4,
        posts_per_user: 20.0,
        ..SynthConfig::default()
    };
    let (raw, _) = generate(&synth).unwrap();
    let cfg = ExperimentConfig::default();
    let exp = Experiment::prepare(&raw, &cfg).unwrap();
    c.bench_function("hashtag_table", |b| b.iter(|| hashtag_table(exp.dataset(), exp.pairs()).unwrap()));
}

fn bench_embedding(c: &mut Criterion) {
    let n = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let edges: Vec<(usize, usize, f64)> = (0..n * 5)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), 1.0))
        .filter(|(a, b, _)| a != b)
        .collect();
    let graph = WalkGraph::from_edges(n, edges).unwrap();
    let walk = WalkConfig::default();
    let mut group = c.benchmark_group("embedding");
    group.sample_size(10);
    group.bench_function("walks_200_nodes", |b| b.iter(|| random_walks(&graph, &walk, 5).unwrap()));
    let walks = random_walks(&graph, &walk, 5).unwrap();
    let sg = SkipGramConfig {
        epochs: 1,
        ..SkipGramConfig::default()
    };
    group.bench_function("skipgram_one_epoch", |b| {
        b.iter_batched(|| walks.clone(), |w| train_skipgram(&w, n, &sg, 6).unwrap(), BatchSize::LargeInput)
    });
    group.finish();
}

criterion_group!(benches, bench_auc, bench_forest, bench_hashtag_features, bench_embedding);
criterion_main!(benches);
