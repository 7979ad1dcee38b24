//! Hashtag adversary: ten features built from the hashtags two users have
//! in common, weighted by the popularity and the usage entropy of each tag.

use std::collections::BTreeMap;

use crate::dataset::{Dataset, UserId};
use crate::error::{Error, Result};
use crate::modality::Modality;

/// Log base of usage entropies (bits).
pub const ENTROPY_BASE: f64 = 2.0;
/// Log base of the popularity-weighted Adamic-Adar sum.
pub const POPULARITY_LOG_BASE: f64 = std::f64::consts::E;

const MIN_ENTROPY: f64 = 1e-12;

pub const FEATURE_NAMES: [&str; 10] = [
    "x_comm", "x_frac", "x_dotpro", "x_cosine", "x_minH", "x_aaH", "x_minE", "x_aaE", "x_w_aaE",
    "x_f_aaE",
];

/// Shannon entropy of a nonnegative weight vector normalized to a
/// distribution.
pub fn entropy(weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let h: f64 = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log(ENTROPY_BASE)
        })
        .sum();
    Ok(h.max(0.0))
}

/// Entropy of a hashtag-user count vector.
pub fn hashtag_entropy(counts: &[u64]) -> Result<f64> {
    let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    entropy(&w)
}

#[derive(Clone, Debug)]
struct TagStats {
    total: u64,
    entropy: f64,
}

/// Hashtag usage of every user plus per-hashtag totals and entropies.
#[derive(Clone, Debug)]
pub struct HashtagIndex {
    names: Vec<String>,
    stats: Vec<TagStats>,
    /// Per-user (tag id, use count), sorted by tag id.
    users: BTreeMap<UserId, Vec<(u32, u64)>>,
}

impl HashtagIndex {
    pub fn build(d: &Dataset) -> Result<Self> {
        let idx = d.index();
        let mut names = Vec::with_capacity(idx.hashtag_users.len());
        let mut stats = Vec::with_capacity(idx.hashtag_users.len());
        for (tag, by_user) in &idx.hashtag_users {
            let counts: Vec<u64> = by_user.values().map(|&c| c as u64).collect();
            stats.push(TagStats {
                total: counts.iter().sum(),
                entropy: hashtag_entropy(&counts)?,
            });
            names.push(tag.clone());
        }
        let users = idx
            .hashtags
            .iter()
            .map(|(&u, counts)| {
                let row = counts
                    .iter()
                    .map(|(tag, &c)| {
                        let id = names.binary_search(tag).expect("indexed hashtag") as u32;
                        (id, c as u64)
                    })
                    .collect();
                (u, row)
            })
            .collect();
        Ok(HashtagIndex { names, stats, users })
    }

    pub fn total(&self, tag: &str) -> Option<u64> {
        let i = self.names.binary_search_by(|t| t.as_str().cmp(tag)).ok()?;
        Some(self.stats[i].total)
    }

    pub fn entropy_of(&self, tag: &str) -> Option<f64> {
        let i = self.names.binary_search_by(|t| t.as_str().cmp(tag)).ok()?;
        Some(self.stats[i].entropy)
    }

    pub fn has_user(&self, u: UserId) -> bool {
        self.users.contains_key(&u)
    }

    /// Whether the two users share at least one hashtag.
    pub fn shares_tag(&self, u: UserId, v: UserId) -> bool {
        match (self.users.get(&u), self.users.get(&v)) {
            (Some(a), Some(b)) => {
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].0.cmp(&b[j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => return true,
                    }
                }
                false
            }
            _ => false,
        }
    }

    fn checked_entropy(&self, id: u32) -> Result<f64> {
        let s = &self.stats[id as usize];
        if s.entropy < MIN_ENTROPY {
            return Err(Error::FilterViolated {
                tag: self.names[id as usize].clone(),
                reason: format!("usage entropy {} is zero (single user)", s.entropy),
            });
        }
        Ok(s.entropy)
    }

    /// `(x_comm, x_frac, x_dotpro, x_cosine, x_minH, x_aaH, x_minE, x_aaE,
    /// x_w_aaE, x_f_aaE)` for a pair sharing at least one hashtag.
    pub fn features(&self, u: UserId, v: UserId) -> Result<[f64; 10]> {
        let unavailable = |reason| Error::Unavailable {
            modality: Modality::Hashtag,
            u: u.0,
            v: v.0,
            reason,
        };
        let a = self.users.get(&u).ok_or_else(|| unavailable("user without hashtags"))?;
        let b = self.users.get(&v).ok_or_else(|| unavailable("user without hashtags"))?;

        let mut common = Vec::new();
        let mut union_inv_entropy = 0.0;
        let mut union = 0usize;
        let (mut i, mut j) = (0, 0);
        let mut dot = 0.0;
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].0 <= b[j].0);
            let take_b = i >= a.len() || (j < b.len() && b[j].0 <= a[i].0);
            let id = if take_a { a[i].0 } else { b[j].0 };
            union += 1;
            union_inv_entropy += 1.0 / self.checked_entropy(id)?;
            if take_a && take_b {
                common.push(id);
                dot += (a[i].1 * b[j].1) as f64;
            }
            if take_a {
                i += 1;
            }
            if take_b {
                j += 1;
            }
        }
        if common.is_empty() {
            return Err(unavailable("no common hashtag"));
        }

        let norm_a: f64 = a.iter().map(|&(_, c)| (c * c) as f64).sum();
        let norm_b: f64 = b.iter().map(|&(_, c)| (c * c) as f64).sum();
        let mut min_total = u64::MAX;
        let mut aa_popularity = 0.0;
        let mut min_entropy = f64::INFINITY;
        let mut aa_entropy = 0.0;
        for &id in &common {
            let s = &self.stats[id as usize];
            if s.total < 2 {
                return Err(Error::FilterViolated {
                    tag: self.names[id as usize].clone(),
                    reason: format!("used {} time(s) in total", s.total),
                });
            }
            min_total = min_total.min(s.total);
            aa_popularity += 1.0 / (s.total as f64).log(POPULARITY_LOG_BASE);
            let e = self.checked_entropy(id)?;
            min_entropy = min_entropy.min(e);
            aa_entropy += 1.0 / e;
        }
        let comm = common.len() as f64;
        Ok([
            comm,
            comm / union as f64,
            dot,
            dot / (norm_a * norm_b).sqrt(),
            min_total as f64,
            aa_popularity,
            min_entropy,
            aa_entropy,
            aa_entropy / union as f64,
            aa_entropy / union_inv_entropy,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::*;

    #[test]
    fn entropy_by_hand() {
        assert_eq!(hashtag_entropy(&[1, 1]).unwrap(), 1.0);
        assert_eq!(hashtag_entropy(&[4]).unwrap(), 0.0);
        let expected = -0.75 * 0.75f64.log2() - 0.25 * 0.25f64.log2();
        assert!((hashtag_entropy(&[3, 1]).unwrap() - expected).abs() < 1e-15);
        assert!((hashtag_entropy(&[3, 1]).unwrap() - 0.8113).abs() < 1e-4);
        assert!(matches!(hashtag_entropy(&[0, 0]), Err(Error::ZeroCounts)));
        assert!(matches!(hashtag_entropy(&[]), Err(Error::ZeroCounts)));
    }

    #[test]
    fn common_and_fraction() {
        // every tag gets a second user (9) so totals/entropies are defined
        let d = dataset(
            vec![
                post(0, 1, &["a", "b", "c"], ""),
                post(1, 2, &["b", "c", "d"], ""),
                post(2, 9, &["a", "d"], ""),
            ],
            &[],
        );
        let idx = HashtagIndex::build(&d).unwrap();
        let f = idx.features(UserId(1), UserId(2)).unwrap();
        assert_eq!(f[0], 2.0);
        assert_eq!(f[1], 0.5);
        assert_eq!(f[2], 2.0);
        assert!((f[3] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn popularity_features_by_hand() {
        // "p" total 2 (u:1, v:1), "q" total 5 (u:1, v:1, w:3)
        let d = dataset(
            vec![
                post(0, 1, &["p", "q"], ""),
                post(1, 2, &["p", "q"], ""),
                post(2, 3, &["q", "q", "q"], ""),
            ],
            &[],
        );
        let idx = HashtagIndex::build(&d).unwrap();
        let f = idx.features(UserId(1), UserId(2)).unwrap();
        assert_eq!(f[4], 2.0);
        let aa = 1.0 / 2f64.ln() + 1.0 / 5f64.ln();
        assert!((f[5] - aa).abs() < 1e-12);
        assert!((f[5] - 2.0640).abs() < 1e-4);
    }

    #[test]
    fn entropy_features_by_hand() {
        // common: "x" with counts (1, 1) -> 1 bit; "y" with counts (3, 1) -> 0.8113
        // union adds "z" and "w" chosen so that sum of 1/E over the union is
        // 1 + 1/0.8113 + 1/E_z + 1/E_w.
        let d = dataset(
            vec![
                post(0, 1, &["x", "y", "y", "y", "z"], ""),
                post(1, 2, &["x", "y", "w"], ""),
                post(2, 3, &["z", "w"], ""),
            ],
            &[],
        );
        let idx = HashtagIndex::build(&d).unwrap();
        let e_y = hashtag_entropy(&[3, 1]).unwrap();
        let f = idx.features(UserId(1), UserId(2)).unwrap();
        let aa = 1.0 + 1.0 / e_y;
        assert!((f[6] - e_y).abs() < 1e-15);
        assert!((f[7] - aa).abs() < 1e-12);
        assert!((f[7] - 2.2326).abs() < 1e-4);
        assert!((f[8] - aa / 4.0).abs() < 1e-12);
        // z: (1, 1), w: (1, 1) -> 1 bit each
        let union_sum = 1.0 + 1.0 / e_y + 1.0 + 1.0;
        assert!((f[9] - aa / union_sum).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let d = dataset(
            vec![post(0, 1, &["a", "solo"], ""), post(1, 2, &["b"], ""), post(2, 3, &["a", "b"], "")],
            &[],
        );
        let idx = HashtagIndex::build(&d).unwrap();
        assert!(matches!(idx.features(UserId(2), UserId(9)), Err(Error::Unavailable { .. })));
        // "solo" has a single user: entropy guard fires
        assert!(matches!(idx.features(UserId(1), UserId(3)), Err(Error::FilterViolated { .. })));
        assert!(idx.features(UserId(2), UserId(3)).is_ok());
        let d = dataset(vec![post(0, 1, &["a"], ""), post(1, 2, &["b"], ""), post(2, 3, &["a", "b"], "")], &[]);
        let idx = HashtagIndex::build(&d).unwrap();
        assert!(matches!(idx.features(UserId(1), UserId(2)), Err(Error::Unavailable { .. })));
    }

    #[test]
    fn identical_users_have_unit_fraction() {
        let d = dataset(
            vec![post(0, 1, &["a", "b"], ""), post(1, 2, &["a", "b"], ""), post(2, 3, &["a"], "")],
            &[],
        );
        let idx = HashtagIndex::build(&d).unwrap();
        let f = idx.features(UserId(1), UserId(2)).unwrap();
        assert_eq!(f[1], 1.0);
        assert!((f[3] - 1.0).abs() < 1e-15);
        assert_eq!(f, idx.features(UserId(2), UserId(1)).unwrap());
    }
}
