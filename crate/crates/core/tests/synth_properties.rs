use std::collections::BTreeSet;

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tieprobe::dataset::{load_dataset_with, DEFAULT_CATEGORIES};
use tieprobe::experiment::{Experiment, ExperimentConfig};
use tieprobe::synth::{generate, write_synth, SynthConfig, EDGES_FILE, POSTS_FILE};
use tieprobe::{Dataset, UserId};

fn common_tags(d: &Dataset, u: UserId, v: UserId) -> usize {
    let idx = &d.index().hashtags;
    match (idx.get(&u), idx.get(&v)) {
        (Some(a), Some(b)) => a.keys().filter(|t| b.contains_key(*t)).count(),
        _ => 0,
    }
}

fn quantile(sorted: &[usize], q: f64) -> usize {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

#[test]
fn friends_share_more_hashtags_at_upper_deciles() {
    let (d, _) = generate(&SynthConfig::default()).unwrap();
    let mut friends: Vec<usize> = d.edges().iter().map(|&(u, v)| common_tags(&d, u, v)).collect();
    let users: Vec<UserId> = d.users().iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut strangers = Vec::new();
    while strangers.len() < friends.len() {
        let pick: Vec<&UserId> = users.iter().choose_multiple(&mut rng, 2);
        let (u, v) = (*pick[0], *pick[1]);
        if !d.has_edge(u, v) {
            strangers.push(common_tags(&d, u, v));
        }
    }
    friends.sort_unstable();
    strangers.sort_unstable();
    for q in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let (f, s) = (quantile(&friends, q), quantile(&strangers, q));
        assert!(f >= s, "decile {q}: friends {f} < strangers {s}");
    }
    assert!(quantile(&friends, 0.9) > quantile(&strangers, 0.9));
}

#[test]
fn generated_files_reload_identically() {
    let cfg = SynthConfig {
        n_users: 60,
        n_communities: 3,
        posts_per_user: 10.0,
        ..SynthConfig::default()
    };
    let (d, truth) = generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), &d, &truth).unwrap();
    let back = load_dataset_with(&dir.path().join(POSTS_FILE), &dir.path().join(EDGES_FILE), DEFAULT_CATEGORIES).unwrap();
    assert_eq!(back.posts(), d.posts());
    assert_eq!(back.edges(), d.edges());
    assert!(back.index_is_consistent());

    let (again, truth_again) = generate(&cfg).unwrap();
    assert_eq!(again.posts(), d.posts());
    assert_eq!(truth_again, truth);
    let planted: BTreeSet<(UserId, UserId)> = truth.signals.iter().map(|s| (s.u, s.v)).collect();
    assert!(planted.iter().all(|&(u, v)| d.has_edge(u, v)));
}

#[test]
fn small_pipeline_produces_every_subset() {
    let (raw, _) = generate(&SynthConfig {
        n_users: 100,
        n_communities: 4,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut cfg = ExperimentConfig::default();
    for e in [&mut cfg.location, &mut cfg.network.embed] {
        e.walk.walks_per_node = 4;
        e.walk.walk_length = 20;
        e.skipgram.dim = 16;
        e.skipgram.epochs = 2;
    }
    cfg.evaluation.forest.n_trees = 20;
    let exp = Experiment::prepare(&raw, &cfg).unwrap();
    let tables = exp.feature_tables(&cfg).unwrap();
    let report = exp.evaluate_fusion(&tables, &cfg).unwrap();
    assert_eq!(report.subsets.len(), 31);
    assert_eq!(report.confidences.len(), cfg.evaluation.folds);
    assert_eq!(report.scores.len(), exp.pairs().len());
    for a in report.multimodal.fold_aucs.iter().chain(&report.baseline.fold_aucs) {
        assert!((0.0..=1.0).contains(a));
    }
    assert!(report.multimodal.mean > 0.7, "fused AUC {}", report.multimodal.mean);
}
