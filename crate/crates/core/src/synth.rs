//! Synthetic social network with planted communities and pair-private
//! signals, standing in for a crawled dataset.
//!
//! Users are split into contiguous communities and befriended by a
//! stochastic block model. Each community owns pools of tokens, hashtags,
//! places and scene categories that its members prefer; a share of friend
//! pairs additionally receives hashtags and a place nobody else uses.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_dataset, Dataset, Edge, Post, UserId};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_communities: usize,
    /// Friendship probability within a community.
    pub p_in: f64,
    /// Friendship probability across communities.
    pub p_out: f64,
    /// Poisson mean of posts per user (at least one post is kept).
    pub posts_per_user: f64,
    pub vocab_size: usize,
    pub n_hashtags: usize,
    pub n_locations: usize,
    pub n_categories: usize,
    /// Probability that a token, hashtag, place or main scene is drawn from
    /// the user's community-derived profile rather than the background.
    pub topic_concentration: f64,
    /// Probability that a friend pair shares private hashtags and a place.
    pub pair_signal_rate: f64,
    pub tokens_per_post: f64,
    pub hashtags_per_post: f64,
    /// Probability that a post carries an image.
    pub image_rate: f64,
    /// Probability that a post carries a check-in.
    pub location_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_users: 300,
            n_communities: 10,
            p_in: 0.15,
            p_out: 0.002,
            posts_per_user: 40.0,
            vocab_size: 3000,
            n_hashtags: 2000,
            n_locations: 600,
            n_categories: crate::dataset::DEFAULT_CATEGORIES,
            topic_concentration: 0.7,
            pair_signal_rate: 0.5,
            tokens_per_post: 10.0,
            hashtags_per_post: 2.0,
            image_rate: 0.8,
            location_rate: 0.7,
        }
    }
}

/// Sizes of the item pools derived from the configured totals.
#[derive(Clone, Copy, Debug)]
struct Pools {
    background_tokens: usize,
    community_tokens: usize,
    popular_tags: usize,
    community_tags: usize,
    interest_tags: usize,
    personal_tags: usize,
    popular_places: usize,
    community_places: usize,
    personal_places: usize,
    community_categories: usize,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        prob("p_in", self.p_in)?;
        prob("p_out", self.p_out)?;
        prob("topic_concentration", self.topic_concentration)?;
        prob("pair_signal_rate", self.pair_signal_rate)?;
        prob("image_rate", self.image_rate)?;
        prob("location_rate", self.location_rate)?;
        if self.n_users == 0 || self.n_communities == 0 || self.n_communities > self.n_users {
            return Err(Error::Config(format!(
                "need 0 < n_communities ({}) <= n_users ({})",
                self.n_communities, self.n_users
            )));
        }
        for (name, x) in [
            ("posts_per_user", self.posts_per_user),
            ("tokens_per_post", self.tokens_per_post),
            ("hashtags_per_post", self.hashtags_per_post),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n_categories == 0 || self.n_categories > u16::MAX as usize + 1 {
            return Err(Error::Config(format!("invalid category count {}", self.n_categories)));
        }
        let c = self.n_communities;
        if self.vocab_size < 4 * c || self.n_hashtags < 10 * c || self.n_locations < 4 * c || self.n_categories < c {
            return Err(Error::Config(
                "vocabulary, hashtag, location and category counts too small for the community count".into(),
            ));
        }
        Ok(())
    }

    fn pools(&self) -> Pools {
        let c = self.n_communities;
        let popular_tags = (self.n_hashtags / 100).max(1);
        let community_tags = (self.n_hashtags / 5 / c).max(1);
        let interest_tags = (self.n_hashtags * 3 / 10).max(1);
        let popular_places = (self.n_locations / 20).max(1);
        let community_places = (self.n_locations / 2 / c).max(1);
        Pools {
            background_tokens: self.vocab_size / 2,
            community_tokens: (self.vocab_size - self.vocab_size / 2) / c,
            popular_tags,
            community_tags,
            interest_tags,
            personal_tags: self.n_hashtags - popular_tags - community_tags * c - interest_tags,
            popular_places,
            community_places,
            personal_places: self.n_locations - popular_places - community_places * c,
            community_categories: (self.n_categories / c).clamp(1, 6),
        }
    }

    /// Expected number of friendships.
    pub fn expected_edges(&self) -> f64 {
        let n = self.n_users as f64;
        let within: f64 = (0..self.n_communities)
            .map(|c| {
                let size = community_range(c, self.n_users, self.n_communities).len() as f64;
                size * (size - 1.0) / 2.0
            })
            .sum();
        let total = n * (n - 1.0) / 2.0;
        self.p_in * within + self.p_out * (total - within)
    }
}

fn community_range(c: usize, n_users: usize, n_communities: usize) -> std::ops::Range<usize> {
    (c * n_users / n_communities)..((c + 1) * n_users / n_communities)
}

/// Private signal planted on one friend pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSignal {
    pub u: UserId,
    pub v: UserId,
    pub hashtags: Vec<String>,
    pub location: u64,
}

/// What the generator planted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// Community of every user, indexed by user id.
    pub communities: Vec<usize>,
    pub signals: Vec<PairSignal>,
}

/// Weighted choice over a fixed item list.
struct Profile {
    items: Vec<usize>,
    pick: WeightedIndex<f64>,
}

impl Profile {
    fn new(items: Vec<usize>, weights: Vec<f64>) -> Profile {
        let pick = WeightedIndex::new(weights).expect("profile weights are positive");
        Profile { items, pick }
    }

    /// `k` distinct items of `offset..offset + size` with exponential weights.
    fn random(rng: &mut Rng, offset: usize, size: usize, k: usize) -> Profile {
        let items: Vec<usize> = index::sample(rng, size, k.min(size))
            .into_iter()
            .map(|i| offset + i)
            .collect();
        let weights = items.iter().map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
        Profile::new(items, weights)
    }

    /// Zipf weights over `offset..offset + size`.
    fn zipf(offset: usize, size: usize) -> Profile {
        Profile::new(
            (offset..offset + size).collect(),
            (0..size).map(|r| 1.0 / (r + 1) as f64).collect(),
        )
    }

    fn draw(&self, rng: &mut Rng) -> usize {
        self.items[self.pick.sample(rng)]
    }
}

struct User {
    tokens: Profile,
    community_tags: Profile,
    interest_tags: Profile,
    personal_tags: Vec<usize>,
    places: Profile,
    categories: Profile,
    /// First category of the community's block.
    category_block: usize,
}

fn poisson(rng: &mut Rng, mean: f64) -> usize {
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Share of an image's secondary scenes drawn from the community's block.
const SECONDARY_COHERENCE: f64 = 0.015;

fn image(rng: &mut Rng, cfg: &SynthConfig, user: &User) -> Vec<(u16, f64)> {
    let main = if rng.random::<f64>() < cfg.topic_concentration {
        user.categories.draw(rng)
    } else {
        rng.random_range(0..cfg.n_categories)
    };
    let main_p = rng.random_range(0.3..0.9);
    let mut probs = vec![(main as u16, main_p)];
    let n_minor = rng.random_range(3..=6);
    let rest = (1.0 - main_p) * rng.random_range(0.5..1.0);
    let shares: Vec<f64> = (0..n_minor).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let total: f64 = shares.iter().sum();
    let block = cfg.n_categories.min(user.category_block + cfg.pools().community_categories);
    for s in shares {
        // secondary scenes follow the community's taste like the main one
        let c = if rng.random::<f64>() < SECONDARY_COHERENCE {
            rng.random_range(user.category_block..block)
        } else {
            rng.random_range(0..cfg.n_categories)
        } as u16;
        if probs.iter().all(|&(k, _)| k != c) {
            probs.push((c, rest * s / total));
        }
    }
    probs.sort_by_key(|&(c, _)| c);
    probs
}

/// Generates a dataset and the planted ground truth; deterministic in the
/// configured seed.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, Truth)> {
    cfg.validate()?;
    let expected = cfg.expected_edges();
    if expected < 1.0 {
        warn!("configuration expects only {expected:.2} friendships");
    }
    let pools = cfg.pools();
    let mut rng = rng::stream(cfg.seed, &[rng::tag::SYNTH]);
    let n = cfg.n_users;
    let c = cfg.n_communities;
    let communities: Vec<usize> = (0..c)
        .flat_map(|k| community_range(k, n, c).map(move |_| k))
        .collect();

    let mut edges: Vec<Edge> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if communities[a] == communities[b] { cfg.p_in } else { cfg.p_out };
            if rng.random::<f64>() < p {
                edges.push((UserId(a as u64), UserId(b as u64)));
            }
        }
    }

    let tag_base_community = pools.popular_tags;
    let tag_base_interest = tag_base_community + pools.community_tags * c;
    let tag_base_personal = tag_base_interest + pools.interest_tags;
    let place_base_community = pools.popular_places;
    let place_base_personal = place_base_community + pools.community_places * c;
    let personal_tags_each = (pools.personal_tags / n).max(1);

    let users: Vec<User> = (0..n)
        .map(|u| {
            let k = communities[u];
            let tokens = Profile::random(
                &mut rng,
                pools.background_tokens + k * pools.community_tokens,
                pools.community_tokens,
                30,
            );
            let community_tags = Profile::random(
                &mut rng,
                tag_base_community + k * pools.community_tags,
                pools.community_tags,
                10,
            );
            let interest_tags = Profile::random(&mut rng, tag_base_interest, pools.interest_tags, 4);
            let personal_tags = (0..personal_tags_each)
                .map(|i| tag_base_personal + (u * personal_tags_each + i) % pools.personal_tags.max(1))
                .collect();
            let mut place_items: Vec<usize> = index::sample(&mut rng, pools.community_places, 5.min(pools.community_places))
                .into_iter()
                .map(|i| place_base_community + k * pools.community_places + i)
                .collect();
            if pools.personal_places > 0 {
                place_items.push(place_base_personal + u % pools.personal_places);
            }
            let place_weights = place_items.iter().map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
            let places = Profile::new(place_items, place_weights);
            let category_items: Vec<usize> = (0..3)
                .map(|_| {
                    if rng.random::<f64>() < 0.9 {
                        k * pools.community_categories + rng.random_range(0..pools.community_categories)
                    } else {
                        rng.random_range(0..cfg.n_categories)
                    }
                })
                .collect();
            let category_weights = category_items.iter().map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
            let categories = Profile::new(category_items, category_weights);
            User {
                tokens,
                community_tags,
                interest_tags,
                personal_tags,
                places,
                categories,
                category_block: k * pools.community_categories,
            }
        })
        .collect();

    let background_tokens = Profile::zipf(0, pools.background_tokens);
    let popular_tags = Profile::zipf(0, pools.popular_tags);
    let popular_places = Profile::zipf(0, pools.popular_places);

    let mut posts: Vec<Post> = Vec::new();
    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, user) in users.iter().enumerate() {
        let count = poisson(&mut rng, cfg.posts_per_user).max(1);
        for _ in 0..count {
            let conc = cfg.topic_concentration;
            let tokens = (0..poisson(&mut rng, cfg.tokens_per_post))
                .map(|_| {
                    let t = if rng.random::<f64>() < conc {
                        user.tokens.draw(&mut rng)
                    } else {
                        background_tokens.draw(&mut rng)
                    };
                    format!("w{t}")
                })
                .collect();
            let hashtags = (0..poisson(&mut rng, cfg.hashtags_per_post))
                .map(|_| {
                    let h = if rng.random::<f64>() < conc {
                        user.community_tags.draw(&mut rng)
                    } else {
                        match rng.random_range(0..5) {
                            0 | 1 => popular_tags.draw(&mut rng),
                            2 | 3 => user.interest_tags.draw(&mut rng),
                            _ => user.personal_tags[rng.random_range(0..user.personal_tags.len())],
                        }
                    };
                    format!("h{h}")
                })
                .collect();
            let image = (rng.random::<f64>() < cfg.image_rate).then(|| image(&mut rng, cfg, user));
            let location = (rng.random::<f64>() < cfg.location_rate).then(|| {
                if rng.random::<f64>() < conc {
                    user.places.draw(&mut rng) as u64
                } else {
                    popular_places.draw(&mut rng) as u64
                }
            });
            by_user[u].push(posts.len());
            posts.push(Post {
                id: posts.len() as u64 + 1,
                author: UserId(u as u64),
                hashtags,
                tokens,
                image,
                location,
            });
        }
    }

    let mut signals = Vec::new();
    for &(a, b) in &edges {
        if rng.random::<f64>() >= cfg.pair_signal_rate {
            continue;
        }
        let k = signals.len();
        let tags: Vec<String> = (0..rng.random_range(1..=3)).map(|i| format!("pair_{k}_{i}")).collect();
        let place = (cfg.n_locations + k) as u64;
        for who in [a, b] {
            let own = &by_user[who.0 as usize];
            for tag in &tags {
                for _ in 0..rng.random_range(1..=3) {
                    let p = own[rng.random_range(0..own.len())];
                    posts[p].hashtags.push(tag.clone());
                }
            }
            for _ in 0..rng.random_range(2..=4) {
                let p = own[rng.random_range(0..own.len())];
                posts[p].location = Some(place);
            }
        }
        signals.push(PairSignal {
            u: a,
            v: b,
            hashtags: tags,
            location: place,
        });
    }

    let user_ids: BTreeSet<UserId> = (0..n as u64).map(UserId).collect();
    let d = Dataset::new(user_ids, posts, edges, cfg.n_categories)?;
    Ok((d, Truth { communities, signals }))
}

/// File names written by [`write_synth`].
pub const POSTS_FILE: &str = "posts.jsonl";
pub const EDGES_FILE: &str = "edges.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// Writes the posts and edges files plus the ground-truth manifest.
pub fn write_synth(dir: &Path, d: &Dataset, truth: &Truth) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_dataset(d, &dir.join(POSTS_FILE), &dir.join(EDGES_FILE))?;
    let path = dir.join(TRUTH_FILE);
    let json = serde_json::to_string_pretty(truth).map_err(|e| Error::Data(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}
