use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Embedding;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Maximum context distance; each center samples an effective window
    /// uniformly from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to 1e-4 of itself.
    pub learning_rate: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 128,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("skip-gram window must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

pub struct Trained {
    pub embedding: Embedding,
    /// Mean loss per (center, target) term for each epoch.
    pub epoch_losses: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Loss of one target and the coefficient `label - sigmoid(score)`; the
/// loss gradient with respect to the score is minus the coefficient.
fn target_term(score: f64, positive: bool) -> (f64, f64) {
    if positive {
        (neg_log_sigmoid(score), 1.0 - sigmoid(score))
    } else {
        (neg_log_sigmoid(-score), -sigmoid(score))
    }
}

/// Dot product with eight independent partial sums, which lets the
/// compiler vectorize the reduction.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Negative-sampling loss of one (center, context, negatives) triple.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    target_term(dot(center, context), true).0
        + negatives
            .iter()
            .map(|n| target_term(dot(center, n), false).0)
            .sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`].
pub fn sgns_gradient(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> SgnsGradient {
    let mut g_center = vec![0.0; center.len()];
    let mut term = |target: &[f64], positive: bool| -> Vec<f64> {
        let (_, coeff) = target_term(dot(center, target), positive);
        for (g, t) in g_center.iter_mut().zip(target) {
            *g -= coeff * t;
        }
        center.iter().map(|c| -coeff * c).collect()
    };
    let g_context = term(context, true);
    let g_negatives = negatives.iter().map(|n| term(n, false)).collect();
    SgnsGradient {
        center: g_center,
        context: g_context,
        negatives: g_negatives,
    }
}

/// Trains center vectors on `walks` over nodes `0..n_nodes`. Nodes absent
/// from every walk get no vector. Training is sequential, so the result is
/// a pure function of the walks, the config and the seed.
pub fn train_skipgram(walks: &[Vec<u32>], n_nodes: usize, cfg: &SkipGramConfig, seed: u64) -> Result<Trained> {
    cfg.validate()?;
    let mut counts = vec![0u64; n_nodes];
    for w in walks {
        for &n in w {
            let slot = counts
                .get_mut(n as usize)
                .ok_or_else(|| Error::Data(format!("walk node {n} outside 0..{n_nodes}")))?;
            *slot += 1;
        }
    }
    let vocab: Vec<usize> = (0..n_nodes).filter(|&n| counts[n] > 0).collect();
    if vocab.is_empty() {
        return Err(Error::Data("skip-gram training on empty walks".into()));
    }
    let dim = cfg.dim;
    let mut rng = rng::stream(seed, &[rng::tag::SKIPGRAM]);
    let mut input = vec![0.0; n_nodes * dim];
    for &n in &vocab {
        for x in &mut input[n * dim..(n + 1) * dim] {
            *x = (rng.random::<f64>() - 0.5) / dim as f64;
        }
    }
    let mut output = vec![0.0; n_nodes * dim];
    let noise = WeightedIndex::new(vocab.iter().map(|&n| (counts[n] as f64).powf(0.75)))
        .map_err(|e| Error::Data(format!("negative sampling table: {e}")))?;

    let tokens: usize = walks.iter().map(Vec::len).sum();
    let total = (cfg.epochs * tokens).max(1) as f64;
    let mut processed = 0usize;
    let mut neu = vec![0.0; dim];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let (mut loss_sum, mut terms) = (0.0, 0usize);
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let lr = cfg.learning_rate * (1.0 - processed as f64 / total).max(1e-4);
                processed += 1;
                let b = rng.random_range(1..=cfg.window);
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(walk.len() - 1);
                let c = center as usize;
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = walk[j] as usize;
                    neu.fill(0.0);
                    for k in 0..=cfg.negatives {
                        let (target, positive) = if k == 0 {
                            (context, true)
                        } else {
                            let t = vocab[noise.sample(&mut rng)];
                            if t == context {
                                continue;
                            }
                            (t, false)
                        };
                        let w_c = &input[c * dim..(c + 1) * dim];
                        let o_t = &mut output[target * dim..(target + 1) * dim];
                        let (loss, coeff) = target_term(dot(w_c, o_t), positive);
                        loss_sum += loss;
                        terms += 1;
                        let g = coeff * lr;
                        for ((acc, o), w) in neu.iter_mut().zip(o_t.iter_mut()).zip(w_c) {
                            *acc += g * *o;
                            *o += g * w;
                        }
                    }
                    for (w, acc) in input[c * dim..(c + 1) * dim].iter_mut().zip(&neu) {
                        *w += acc;
                    }
                }
            }
        }
        epoch_losses.push(if terms > 0 { loss_sum / terms as f64 } else { 0.0 });
    }

    let vectors = (0..n_nodes)
        .map(|n| (counts[n] > 0).then(|| input[n * dim..(n + 1) * dim].to_vec()))
        .collect();
    Ok(Trained {
        embedding: Embedding::new(dim, vectors),
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{random_walks, WalkConfig, WalkGraph};
    use rand::SeedableRng;

    fn small(dim: usize, epochs: usize) -> SkipGramConfig {
        SkipGramConfig {
            dim,
            window: 3,
            negatives: 5,
            epochs,
            learning_rate: 0.025,
        }
    }

    #[test]
    fn config_errors() {
        let walks = vec![vec![0, 1]];
        for cfg in [
            SkipGramConfig { dim: 0, ..small(4, 1) },
            SkipGramConfig { window: 0, ..small(4, 1) },
        ] {
            assert!(matches!(train_skipgram(&walks, 2, &cfg, 0), Err(Error::Config(_))));
        }
        assert!(train_skipgram(&[], 2, &small(4, 1), 0).is_err());
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let walks = vec![vec![0, 1, 0, 1]];
        let a = train_skipgram(&walks, 3, &small(4, 0), 5).unwrap();
        let b = train_skipgram(&walks, 3, &small(4, 5), 5).unwrap();
        assert!(a.epoch_losses.is_empty());
        assert!(a.embedding.vector(2).is_none());
        // same init stream: zero-epoch output equals the pre-training draw
        let mut rng = rng::stream(5, &[rng::tag::SKIPGRAM]);
        let init: Vec<f64> = (0..4).map(|_| (rng.random::<f64>() - 0.5) / 4.0).collect();
        assert_eq!(a.embedding.vector(0).unwrap(), init.as_slice());
        assert_ne!(a.embedding.vector(0), b.embedding.vector(0));
    }

    fn finite_difference_check(seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = 6;
        let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let center = draw();
        let context = draw();
        let negatives: Vec<Vec<f64>> = (0..3).map(|_| draw()).collect();
        let g = sgns_gradient(&center, &context, &negatives);
        let h = 1e-5;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
        for i in 0..dim {
            let bump = |v: &Vec<f64>, d: f64| {
                let mut v = v.clone();
                v[i] += d;
                v
            };
            let fd = (sgns_loss(&bump(&center, h), &context, &negatives)
                - sgns_loss(&bump(&center, -h), &context, &negatives))
                / (2.0 * h);
            assert!(rel(fd, g.center[i]) < 1e-4, "center[{i}] {fd} vs {}", g.center[i]);
            let fd = (sgns_loss(&center, &bump(&context, h), &negatives)
                - sgns_loss(&center, &bump(&context, -h), &negatives))
                / (2.0 * h);
            assert!(rel(fd, g.context[i]) < 1e-4);
            for k in 0..negatives.len() {
                let mut plus = negatives.clone();
                plus[k][i] += h;
                let mut minus = negatives.clone();
                minus[k][i] -= h;
                let fd = (sgns_loss(&center, &context, &plus) - sgns_loss(&center, &context, &minus)) / (2.0 * h);
                assert!(rel(fd, g.negatives[k][i]) < 1e-4);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            finite_difference_check(seed);
        }
    }

    #[test]
    fn loss_is_stable_for_extreme_scores() {
        assert!(neg_log_sigmoid(800.0).is_finite());
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
        assert!((neg_log_sigmoid(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    fn two_cliques() -> WalkGraph {
        let mut edges = Vec::new();
        for base in [0usize, 6] {
            for a in 0..6 {
                for b in a + 1..6 {
                    edges.push((base + a, base + b, 1.0));
                }
            }
        }
        WalkGraph::from_edges(12, edges).unwrap()
    }

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
    }

    #[test]
    fn cliques_separate() {
        let g = two_cliques();
        let walks = random_walks(&g, &WalkConfig { walks_per_node: 10, walk_length: 20, p: 1.0, q: 1.0 }, 1).unwrap();
        let t = train_skipgram(&walks, 12, &small(16, 5), 2).unwrap();
        let e = &t.embedding;
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for a in 0..12 {
            for b in a + 1..12 {
                let c = cos(e.vector(a).unwrap(), e.vector(b).unwrap());
                if (a < 6) == (b < 6) {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        assert!(intra / ni as f64 > inter / nx as f64 + 0.2, "intra {intra} inter {inter}");
        let rising = t.epoch_losses.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(rising as f64 <= 0.2 * (t.epoch_losses.len() - 1) as f64, "{:?}", t.epoch_losses);
    }

    #[test]
    fn alternating_walk_sign_stable_across_seeds() {
        let walk: Vec<u32> = (0..200).map(|i| (i % 2) as u32).collect();
        let mut signs = Vec::new();
        for seed in 0..5 {
            let t = train_skipgram(std::slice::from_ref(&walk), 2, &small(8, 3), seed).unwrap();
            let c = cos(t.embedding.vector(0).unwrap(), t.embedding.vector(1).unwrap());
            signs.push(c.signum());
        }
        assert!(signs.windows(2).all(|w| w[0] == w[1]), "{signs:?}");
    }

    #[test]
    fn deterministic() {
        let g = two_cliques();
        let walks = random_walks(&g, &WalkConfig { walks_per_node: 2, walk_length: 10, p: 1.0, q: 1.0 }, 1).unwrap();
        let a = train_skipgram(&walks, 12, &small(8, 2), 3).unwrap();
        let b = train_skipgram(&walks, 12, &small(8, 2), 3).unwrap();
        assert_eq!(a.embedding, b.embedding);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }
}
