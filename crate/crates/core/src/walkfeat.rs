//! Walk-based adversaries: user-location co-visits and the partially
//! observed friendship graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{edge, AvailabilityRules, Dataset, Edge, PairSample, UserId};
use crate::embed::{random_walks, train_skipgram, EmbedConfig, Embedding, WalkGraph};
use crate::error::{Error, Result};
use crate::features::{distance_columns, FeatureTable};
use crate::modality::Modality;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Share of published friendships revealed to the adversary.
    pub train_edge_fraction: f64,
    /// Also emit features for pairs that are themselves edges of the
    /// revealed graph. Their label is then visible in the walks, so this is
    /// only useful to measure leakage.
    pub score_train_edges: bool,
    pub embed: EmbedConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            train_edge_fraction: 0.8,
            score_train_edges: false,
            embed: EmbedConfig::default(),
        }
    }
}

fn train(graph: &WalkGraph, cfg: &EmbedConfig, seed: u64, tag: u64) -> Result<(Vec<Vec<u32>>, Embedding)> {
    let walks = random_walks(graph, &cfg.walk, rng::derive(seed, &[tag, rng::tag::WALKS]))?;
    let trained = train_skipgram(
        &walks,
        graph.node_count(),
        &cfg.skipgram,
        rng::derive(seed, &[tag, rng::tag::SKIPGRAM]),
    )?;
    Ok((walks, trained.embedding))
}

pub struct LocationFeatures {
    pub table: FeatureTable,
    pub embedding: Embedding,
    /// Graph node `i` is `users[i]`; location nodes follow the users.
    pub users: Vec<UserId>,
    pub locations: Vec<u64>,
}

/// Embeds eligible users and the places they visited as one bipartite
/// graph weighted by visit counts, then compares user vectors.
pub fn location_features(
    d: &Dataset,
    pairs: &[PairSample],
    rules: &AvailabilityRules,
    cfg: &EmbedConfig,
    seed: u64,
) -> Result<LocationFeatures> {
    let eligible = d.filter_location_users(rules.min_distinct_locations, rules.min_checkins);
    let users: Vec<UserId> = eligible.into_iter().collect();
    let visits = &d.index().locations;
    let locations: Vec<u64> = users
        .iter()
        .flat_map(|u| visits[u].keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let columns = distance_columns();
    if users.is_empty() {
        let table = FeatureTable::new(Modality::Location, columns, vec![None; pairs.len()])?;
        return Ok(LocationFeatures {
            table,
            embedding: Embedding::new(cfg.skipgram.dim, Vec::new()),
            users,
            locations,
        });
    }
    let loc_node: BTreeMap<u64, usize> = locations
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, users.len() + i))
        .collect();
    let edges = users.iter().enumerate().flat_map(|(i, u)| {
        visits[u]
            .iter()
            .map(|(l, &n)| (i, loc_node[l], n as f64))
            .collect::<Vec<_>>()
    });
    let graph = WalkGraph::from_edges(users.len() + locations.len(), edges)?;
    let (_, embedding) = train(&graph, cfg, seed, rng::tag::LOCATION)?;

    let node: BTreeMap<UserId, usize> = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let rows = pairs
        .iter()
        .map(|p| {
            if !p.available.contains(Modality::Location) {
                return Ok(None);
            }
            match (node.get(&p.u), node.get(&p.v)) {
                (Some(&a), Some(&b)) => Ok(Some(embedding.distance_features(a, b)?.values.to_vec())),
                _ => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocationFeatures {
        table: FeatureTable::new(Modality::Location, columns, rows)?,
        embedding,
        users,
        locations,
    })
}

/// Published friendships split into the revealed graph G′ and the
/// held-out remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSplit {
    pub train: BTreeSet<Edge>,
    pub held_out: BTreeSet<Edge>,
}

impl EdgeSplit {
    /// Writes `u,v,split` lines with `train` or `held_out`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "u,v,split").map_err(io)?;
        for (set, name) in [(&self.train, "train"), (&self.held_out, "held_out")] {
            for (a, b) in set {
                writeln!(w, "{a},{b},{name}").map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: &Path) -> Result<EdgeSplit> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut split = EdgeSplit {
            train: BTreeSet::new(),
            held_out: BTreeSet::new(),
        };
        for (i, line) in BufReader::new(file).lines().enumerate().skip(1) {
            let line = line.map_err(|e| Error::io(path, e))?;
            let f: Vec<&str> = line.split(',').collect();
            let parsed = match f.as_slice() {
                [a, b, s] => a.parse().ok().zip(b.parse().ok()).map(|(a, b)| (edge(UserId(a), UserId(b)), *s)),
                _ => None,
            };
            match parsed {
                Some((e, "train")) => split.train.insert(e),
                Some((e, "held_out")) => split.held_out.insert(e),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("bad split record {line:?}"),
                    })
                }
            };
        }
        Ok(split)
    }
}

/// Reveals `round(fraction * |E|)` uniformly chosen edges.
pub fn split_edges(d: &Dataset, fraction: f64, seed: u64) -> Result<EdgeSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("train edge fraction {fraction} outside (0, 1]")));
    }
    let all: Vec<Edge> = d.edges().iter().copied().collect();
    let k = (fraction * all.len() as f64).round() as usize;
    if k == 0 {
        return Err(Error::Data("partial network graph would be empty".into()));
    }
    let mut rng = rng::stream(seed, &[rng::tag::EDGE_SPLIT]);
    let chosen: BTreeSet<usize> = index::sample(&mut rng, all.len(), k).into_iter().collect();
    let (train, held_out) = all
        .into_iter()
        .enumerate()
        .partition::<Vec<_>, _>(|(i, _)| chosen.contains(i));
    Ok(EdgeSplit {
        train: train.into_iter().map(|(_, e)| e).collect(),
        held_out: held_out.into_iter().map(|(_, e)| e).collect(),
    })
}

pub struct NetworkFeatures {
    pub table: FeatureTable,
    pub split: EdgeSplit,
    pub embedding: Embedding,
    /// Graph node `i` is `nodes[i]`: every user with a revealed friendship.
    pub nodes: Vec<UserId>,
    pub walks: Vec<Vec<u32>>,
}

/// node2vec embedding of the revealed graph G′ and Hadamard pair features.
///
/// A pair gets features when both users are in G′ and, unless
/// `score_train_edges` is set, the pair is not itself a revealed edge.
pub fn network_features(d: &Dataset, pairs: &[PairSample], cfg: &NetworkConfig, seed: u64) -> Result<NetworkFeatures> {
    let split = split_edges(d, cfg.train_edge_fraction, seed)?;
    let nodes: Vec<UserId> = split
        .train
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let node: BTreeMap<UserId, usize> = nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let graph = WalkGraph::from_edges(
        nodes.len(),
        split.train.iter().map(|(a, b)| (node[a], node[b], 1.0)),
    )?;
    let (walks, embedding) = train(&graph, &cfg.embed, seed, rng::tag::NETWORK)?;

    let dim = embedding.dim();
    let columns = (0..dim).map(|i| format!("h_{i}")).collect();
    let rows = pairs
        .iter()
        .map(|p| {
            if !p.available.contains(Modality::Network) {
                return Ok(None);
            }
            if !cfg.score_train_edges && split.train.contains(&edge(p.u, p.v)) {
                return Ok(None);
            }
            match (node.get(&p.u), node.get(&p.v)) {
                (Some(&a), Some(&b)) => Ok(Some(embedding.hadamard_features(a, b)?)),
                _ => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkFeatures {
        table: FeatureTable::new(Modality::Network, columns, rows)?,
        split,
        embedding,
        nodes,
        walks,
    })
}

/// Counts consecutive walk steps that traverse a held-out friendship.
pub fn leaked_transitions(walks: &[Vec<u32>], nodes: &[UserId], held_out: &BTreeSet<Edge>) -> usize {
    walks
        .iter()
        .flat_map(|w| w.windows(2))
        .filter(|s| held_out.contains(&edge(nodes[s[0] as usize], nodes[s[1] as usize])))
        .count()
}
