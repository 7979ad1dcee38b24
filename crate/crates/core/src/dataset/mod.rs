//! In-memory data model: users, posts, published friendships and the
//! per-user / per-item indexes every feature extractor reads.

mod filter;
mod io;
mod pairs;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filter::{nearest_rank, percentile_window};
pub use io::{load_dataset, load_dataset_with, tokenize, write_dataset, PostRecord};
pub use pairs::{build_pairs, read_pairs, refresh_availability, write_pairs, AvailabilityRules};

/// Number of Places365 scene categories.
pub const DEFAULT_CATEGORIES: usize = 365;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Unordered user pair, stored with the smaller id first.
pub type Edge = (UserId, UserId);

pub fn edge(a: UserId, b: UserId) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Post {
    pub id: u64,
    pub author: UserId,
    /// Hashtags in order of appearance; repeats count as separate uses.
    pub hashtags: Vec<String>,
    pub tokens: Vec<String>,
    /// Sparse scene-category posterior, sorted by category.
    pub image: Option<Vec<(u16, f64)>>,
    pub location: Option<u64>,
}

impl Post {
    fn validate(&self, n_categories: usize) -> Result<()> {
        let Some(image) = &self.image else {
            return Ok(());
        };
        let bad = |message: String| Error::InvalidPost {
            post: self.id,
            message,
        };
        let mut sum = 0.0;
        for w in image.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(bad(format!("duplicate or unsorted category {}", w[1].0)));
            }
        }
        for &(c, p) in image {
            if c as usize >= n_categories {
                return Err(bad(format!("category {c} outside 0..{n_categories}")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(bad(format!("probability {p} for category {c} outside (0, 1]")));
            }
            sum += p;
        }
        if sum > 1.0 + 1e-6 {
            return Err(bad(format!("image probabilities sum to {sum}")));
        }
        Ok(())
    }
}

/// Per-user and per-item counts derived from the posts and edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetIndex {
    /// H_u with use counts.
    pub hashtags: BTreeMap<UserId, BTreeMap<String, u32>>,
    /// Token counts over each user's concatenated text.
    pub tokens: BTreeMap<UserId, BTreeMap<String, u32>>,
    /// Number of posts carrying an image.
    pub images: BTreeMap<UserId, u32>,
    /// L_u: visits per location.
    pub locations: BTreeMap<UserId, BTreeMap<u64, u32>>,
    /// n_h: per-hashtag use counts by user.
    pub hashtag_users: BTreeMap<String, BTreeMap<UserId, u32>>,
    /// Distinct users per token.
    pub token_users: BTreeMap<String, u32>,
    /// Degree in the current published graph.
    pub degree: BTreeMap<UserId, usize>,
}

impl DatasetIndex {
    pub fn build(users: &BTreeSet<UserId>, posts: &[Post], edges: &BTreeSet<Edge>) -> Self {
        let mut idx = DatasetIndex::default();
        for p in posts {
            for h in &p.hashtags {
                *idx.hashtags
                    .entry(p.author)
                    .or_default()
                    .entry(h.clone())
                    .or_default() += 1;
                *idx.hashtag_users
                    .entry(h.clone())
                    .or_default()
                    .entry(p.author)
                    .or_default() += 1;
            }
            for t in &p.tokens {
                *idx.tokens
                    .entry(p.author)
                    .or_default()
                    .entry(t.clone())
                    .or_default() += 1;
            }
            if p.image.is_some() {
                *idx.images.entry(p.author).or_default() += 1;
            }
            if let Some(loc) = p.location {
                *idx.locations
                    .entry(p.author)
                    .or_default()
                    .entry(loc)
                    .or_default() += 1;
            }
        }
        for counts in idx.tokens.values() {
            for t in counts.keys() {
                *idx.token_users.entry(t.clone()).or_default() += 1;
            }
        }
        for &u in users {
            idx.degree.insert(u, 0);
        }
        for &(a, b) in edges {
            *idx.degree.entry(a).or_default() += 1;
            *idx.degree.entry(b).or_default() += 1;
        }
        idx
    }
}

/// Immutable snapshot of an online social network.
///
/// Follower counts are account metadata fixed when the network is first
/// assembled (degree in the published graph at that time); filters carry
/// them over unchanged, together with the census of the whole population
/// that the account filter takes its percentiles from.
#[derive(Clone, Debug)]
pub struct Dataset {
    users: BTreeSet<UserId>,
    posts: Vec<Post>,
    edges: BTreeSet<Edge>,
    followers: BTreeMap<UserId, usize>,
    census: Arc<Vec<usize>>,
    n_categories: usize,
    index: DatasetIndex,
}

impl Dataset {
    /// Assembles a dataset, validating posts and edges. Followers are taken
    /// from the degrees in `edges`.
    pub fn new(
        users: BTreeSet<UserId>,
        mut posts: Vec<Post>,
        edges: impl IntoIterator<Item = Edge>,
        n_categories: usize,
    ) -> Result<Self> {
        if n_categories == 0 || n_categories > u16::MAX as usize + 1 {
            return Err(Error::Config(format!("invalid category count {n_categories}")));
        }
        posts.sort_by_key(|p| p.id);
        for w in posts.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicatePost(w[0].id));
            }
        }
        for p in &posts {
            if !users.contains(&p.author) {
                return Err(Error::InvalidPost {
                    post: p.id,
                    message: format!("unknown author {}", p.author),
                });
            }
            p.validate(n_categories)?;
        }
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a.0));
            }
            if !users.contains(&a) || !users.contains(&b) {
                return Err(Error::UnknownUser(a.0, b.0));
            }
            edge_set.insert(edge(a, b));
        }
        let index = DatasetIndex::build(&users, &posts, &edge_set);
        let followers = index.degree.clone();
        let mut census: Vec<usize> = followers.values().copied().collect();
        census.sort_unstable();
        Ok(Dataset {
            users,
            posts,
            edges: edge_set,
            followers,
            census: Arc::new(census),
            n_categories,
            index,
        })
    }

    /// Derives a snapshot from this one, keeping account metadata.
    fn derive(&self, users: BTreeSet<UserId>, posts: Vec<Post>, edges: BTreeSet<Edge>) -> Self {
        let index = DatasetIndex::build(&users, &posts, &edges);
        let followers = self
            .followers
            .iter()
            .filter(|(u, _)| users.contains(u))
            .map(|(&u, &f)| (u, f))
            .collect();
        Dataset {
            users,
            posts,
            edges,
            followers,
            census: Arc::clone(&self.census),
            n_categories: self.n_categories,
            index,
        }
    }

    pub fn users(&self) -> &BTreeSet<UserId> {
        &self.users
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, a: UserId, b: UserId) -> bool {
        self.edges.contains(&edge(a, b))
    }

    pub fn followers(&self, u: UserId) -> Option<usize> {
        self.followers.get(&u).copied()
    }

    /// Sorted follower counts of the population the dataset was assembled from.
    pub fn follower_census(&self) -> &[usize] {
        &self.census
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn index(&self) -> &DatasetIndex {
        &self.index
    }

    /// Returns a copy with the posts rejected by `keep` removed.
    pub fn retain_posts(&self, mut keep: impl FnMut(&Post) -> bool) -> Self {
        let posts = self.posts.iter().filter(|p| keep(p)).cloned().collect();
        self.derive(self.users.clone(), posts, self.edges.clone())
    }

    /// Checks that the stored index equals one rebuilt from scratch.
    pub fn index_is_consistent(&self) -> bool {
        DatasetIndex::build(&self.users, &self.posts, &self.edges) == self.index
    }
}

/// A user pair with its ground-truth label and per-modality availability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSample {
    pub u: UserId,
    pub v: UserId,
    pub friend: bool,
    pub available: crate::modality::ModalitySet,
}

impl PairSample {
    pub fn label(&self) -> u8 {
        self.friend as u8
    }
}
