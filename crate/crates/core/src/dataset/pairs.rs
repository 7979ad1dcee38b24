use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{Dataset, PairSample, UserId};
use crate::error::{Error, Result};
use crate::modality::{Modality, ModalitySet};
use crate::rng;

/// Per-modality availability thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvailabilityRules {
    pub min_distinct_locations: usize,
    pub min_checkins: usize,
}

impl Default for AvailabilityRules {
    fn default() -> Self {
        AvailabilityRules {
            min_distinct_locations: 2,
            min_checkins: 20,
        }
    }
}

struct Availability<'a> {
    d: &'a Dataset,
    located: BTreeSet<UserId>,
}

impl<'a> Availability<'a> {
    fn new(d: &'a Dataset, rules: &AvailabilityRules) -> Self {
        let located = d.filter_location_users(rules.min_distinct_locations, rules.min_checkins);
        Availability { d, located }
    }

    fn of(&self, u: UserId, v: UserId) -> ModalitySet {
        let idx = self.d.index();
        let mut set = ModalitySet::EMPTY;
        if let (Some(hu), Some(hv)) = (idx.hashtags.get(&u), idx.hashtags.get(&v)) {
            if hu.keys().any(|h| hv.contains_key(h)) {
                set.insert(Modality::Hashtag);
            }
        }
        if idx.tokens.contains_key(&u) && idx.tokens.contains_key(&v) {
            set.insert(Modality::Text);
        }
        if idx.images.contains_key(&u) && idx.images.contains_key(&v) {
            set.insert(Modality::Image);
        }
        if self.located.contains(&u) && self.located.contains(&v) {
            set.insert(Modality::Location);
        }
        if idx.degree.get(&u).copied().unwrap_or(0) > 0 && idx.degree.get(&v).copied().unwrap_or(0) > 0 {
            set.insert(Modality::Network);
        }
        set
    }
}

/// Samples the labelled pairs of an experiment: every friend pair with at
/// least one available modality, and an equal number of uniformly drawn
/// non-adjacent pairs that also have at least one.
///
/// Hashtag availability requires a common hashtag for every pair. Network
/// availability here only requires both users to have published friends;
/// the network features narrow it further.
pub fn build_pairs(d: &Dataset, rules: &AvailabilityRules, seed: u64) -> Result<Vec<PairSample>> {
    let avail = Availability::new(d, rules);
    let mut pairs: Vec<PairSample> = d
        .edges()
        .iter()
        .map(|&(u, v)| PairSample {
            u,
            v,
            friend: true,
            available: avail.of(u, v),
        })
        .filter(|p| !p.available.is_empty())
        .collect();

    let users: Vec<UserId> = d.users().iter().copied().collect();
    let mut candidates = Vec::new();
    for (i, &u) in users.iter().enumerate() {
        for &v in &users[i + 1..] {
            if d.has_edge(u, v) {
                continue;
            }
            let available = avail.of(u, v);
            if !available.is_empty() {
                candidates.push(PairSample {
                    u,
                    v,
                    friend: false,
                    available,
                });
            }
        }
    }
    let needed = pairs.len();
    if candidates.len() < needed {
        return Err(Error::InsufficientStrangers {
            needed,
            available: candidates.len(),
        });
    }
    let mut rng = rng::stream(seed, &[rng::tag::PAIRS]);
    let mut chosen = index::sample(&mut rng, candidates.len(), needed).into_vec();
    chosen.sort_unstable();
    pairs.extend(chosen.into_iter().map(|i| candidates[i]));
    Ok(pairs)
}

/// Recomputes the availability of existing pairs against `d`, keeping
/// their labels.
pub fn refresh_availability(d: &Dataset, rules: &AvailabilityRules, pairs: &[PairSample]) -> Vec<PairSample> {
    let avail = Availability::new(d, rules);
    pairs
        .iter()
        .map(|p| PairSample {
            available: avail.of(p.u, p.v),
            ..*p
        })
        .collect()
}

pub fn write_pairs(pairs: &[PairSample], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "u,v,label,available").map_err(io)?;
    for p in pairs {
        let avail = if p.available.is_empty() {
            "-".to_string()
        } else {
            p.available.to_string()
        };
        writeln!(w, "{},{},{},{}", p.u, p.v, p.label(), avail).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate().skip(1) {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(format!("expected 4 columns, got {}", f.len())));
        }
        let id = |s: &str| s.parse::<u64>().map(UserId).map_err(|e| parse_err(e.to_string()));
        let friend = match f[2] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(format!("bad label {other:?}"))),
        };
        let available = if f[3] == "-" {
            ModalitySet::EMPTY
        } else {
            f[3].parse().map_err(|e: Error| parse_err(e.to_string()))?
        };
        pairs.push(PairSample {
            u: id(f[0])?,
            v: id(f[1])?,
            friend,
            available,
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;

    fn graph(n: u64, edges: &[(u64, u64)]) -> Dataset {
        dataset((0..n).map(|u| post(u, u, &["common"], "hello world")).collect(), edges)
    }

    #[test]
    fn complete_graph_has_no_strangers() {
        let edges: Vec<(u64, u64)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        let err = build_pairs(&graph(4, &edges), &AvailabilityRules::default(), 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientStrangers { needed: 6, available: 0 }));
    }

    #[test]
    fn balanced_and_non_adjacent() {
        let edges: Vec<(u64, u64)> = (0..10).map(|i| (i, i + 1)).collect();
        let d = graph(30, &edges);
        let pairs = build_pairs(&d, &AvailabilityRules::default(), 9).unwrap();
        let friends = pairs.iter().filter(|p| p.friend).count();
        assert_eq!(friends, 10);
        assert_eq!(pairs.len(), 20);
        for p in pairs.iter().filter(|p| !p.friend) {
            assert!(!d.has_edge(p.u, p.v));
            assert_ne!(p.u, p.v);
        }
        let strangers: BTreeSet<_> = pairs.iter().filter(|p| !p.friend).map(|p| (p.u, p.v)).collect();
        assert_eq!(strangers.len(), 10);
        assert_eq!(pairs, build_pairs(&d, &AvailabilityRules::default(), 9).unwrap());
        assert_ne!(pairs, build_pairs(&d, &AvailabilityRules::default(), 10).unwrap());
    }

    #[test]
    fn availability_flags_follow_indexes() {
        let mut posts = vec![
            post(0, 0, &["x"], "alpha"),
            post(1, 1, &["x"], ""),
            post(2, 2, &["y"], "beta"),
            post(3, 3, &[], "gamma"),
        ];
        posts[0].image = Some(vec![(3, 0.9)]);
        posts[2].image = Some(vec![(3, 0.9)]);
        let d = dataset(posts, &[(0, 1), (2, 3)]);
        let pairs = build_pairs(&d, &AvailabilityRules::default(), 0).unwrap();
        let find = |u: u64, v: u64| pairs.iter().find(|p| p.u == UserId(u) && p.v == UserId(v)).unwrap();
        assert_eq!(find(0, 1).available.to_string(), "HE");
        assert_eq!(find(2, 3).available.to_string(), "TE");
        for p in pairs.iter().filter(|p| !p.friend) {
            let hu = d.index().hashtags.get(&p.u);
            let hv = d.index().hashtags.get(&p.v);
            let common = matches!((hu, hv), (Some(a), Some(b)) if a.keys().any(|h| b.contains_key(h)));
            assert_eq!(common, p.available.contains(Modality::Hashtag));
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        let pairs = vec![
            PairSample { u: UserId(1), v: UserId(2), friend: true, available: "HT".parse().unwrap() },
            PairSample { u: UserId(3), v: UserId(9), friend: false, available: ModalitySet::EMPTY },
        ];
        write_pairs(&pairs, &path).unwrap();
        assert_eq!(read_pairs(&path).unwrap(), pairs);
    }
}
