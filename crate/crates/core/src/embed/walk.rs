use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 80,
            p: 1.0,
            q: 1.0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 {
            return Err(Error::Config("walk_length must be positive".into()));
        }
        if !(self.p > 0.0 && self.q > 0.0) {
            return Err(Error::Config(format!("p and q must be positive, got {} and {}", self.p, self.q)));
        }
        Ok(())
    }
}

/// Undirected graph with positive edge weights, nodes `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkGraph {
    adj: Vec<Vec<(u32, f64)>>,
}

impl WalkGraph {
    /// Builds the graph; repeated edges have their weights summed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Data(format!("self-loop on walk node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Data(format!("walk edge ({a}, {b}) outside 0..{n}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Data(format!("walk edge ({a}, {b}) has weight {w}")));
            }
            adj[a].push((b as u32, w));
            adj[b].push((a as u32, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
            list.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
        }
        Ok(WalkGraph { adj })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, node: usize) -> &[(u32, f64)] {
        &self.adj[node]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search_by_key(&(b as u32), |&(v, _)| v).is_ok()
    }

    pub fn weighted_degree(&self, node: usize) -> f64 {
        self.adj[node].iter().map(|&(_, w)| w).sum()
    }
}

fn pick(weights: &[f64], rng: &mut rng::Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn walk_from(g: &WalkGraph, start: usize, cfg: &WalkConfig, rng: &mut rng::Rng) -> Vec<u32> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start as u32);
    let mut weights = Vec::new();
    let biased = cfg.p != 1.0 || cfg.q != 1.0;
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap() as usize;
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        weights.clear();
        match walk.len().checked_sub(2).map(|i| walk[i] as usize) {
            Some(prev) if biased => weights.extend(nbrs.iter().map(|&(x, w)| {
                let x = x as usize;
                if x == prev {
                    w / cfg.p
                } else if g.is_adjacent(x, prev) {
                    w
                } else {
                    w / cfg.q
                }
            })),
            _ => weights.extend(nbrs.iter().map(|&(_, w)| w)),
        }
        walk.push(nbrs[pick(&weights, rng)].0);
    }
    walk
}

/// `walks_per_node` walks from every node, ordered round by round. Each
/// walk draws from its own stream keyed by (seed, node, round), so the
/// result does not depend on scheduling.
pub fn random_walks(g: &WalkGraph, cfg: &WalkConfig, seed: u64) -> Result<Vec<Vec<u32>>> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(Error::Data("random walks on an empty graph".into()));
    }
    let n = g.node_count();
    Ok((0..cfg.walks_per_node * n)
        .into_par_iter()
        .map(|k| {
            let (round, node) = (k / n, k % n);
            let mut rng = rng::stream(seed, &[rng::tag::WALKS, node as u64, round as u64]);
            walk_from(g, node, cfg, &mut rng)
        })
        .collect())
}
