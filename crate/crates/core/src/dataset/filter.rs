use std::collections::BTreeSet;

use super::{Dataset, UserId};

/// Nearest-rank percentile of an ascending sequence: the value at rank
/// `ceil(pct * n)`, clamped to the first element. `None` when empty.
pub fn nearest_rank(sorted: &[usize], pct: f64) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (pct * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Inclusive follower window `[p_low, p_high]` over an ascending census.
pub fn percentile_window(sorted: &[usize], low_pct: f64, high_pct: f64) -> Option<(usize, usize)> {
    Some((nearest_rank(sorted, low_pct)?, nearest_rank(sorted, high_pct)?))
}

impl Dataset {
    /// Removes accounts whose follower count lies strictly below the
    /// `low_pct` or strictly above the `high_pct` percentile of the census,
    /// along with their posts and incident edges.
    pub fn filter_accounts(&self, low_pct: f64, high_pct: f64) -> Dataset {
        let Some((lo, hi)) = percentile_window(self.follower_census(), low_pct, high_pct) else {
            return self.clone();
        };
        let users: BTreeSet<UserId> = self
            .users
            .iter()
            .copied()
            .filter(|u| (lo..=hi).contains(&self.followers[u]))
            .collect();
        let posts = self
            .posts
            .iter()
            .filter(|p| users.contains(&p.author))
            .cloned()
            .collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(a, b)| users.contains(a) && users.contains(b))
            .collect();
        self.derive(users, posts, edges)
    }

    /// Drops hashtags used by fewer than `min_users` or more than
    /// `max_users` distinct users.
    pub fn filter_hashtags(&self, min_users: usize, max_users: usize) -> Dataset {
        let keep: BTreeSet<&str> = self
            .index
            .hashtag_users
            .iter()
            .filter(|(_, by_user)| (min_users..=max_users).contains(&by_user.len()))
            .map(|(h, _)| h.as_str())
            .collect();
        let posts = self
            .posts
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.hashtags.retain(|h| keep.contains(h.as_str()));
                p
            })
            .collect();
        self.derive(self.users.clone(), posts, self.edges.clone())
    }

    /// Drops text tokens used by fewer than `min_users` or more than
    /// `max_users` distinct users.
    pub fn filter_tokens(&self, min_users: usize, max_users: usize) -> Dataset {
        let keep: BTreeSet<&str> = self
            .index
            .token_users
            .iter()
            .filter(|(_, &n)| (min_users..=max_users).contains(&(n as usize)))
            .map(|(t, _)| t.as_str())
            .collect();
        let posts = self
            .posts
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.tokens.retain(|t| keep.contains(t.as_str()));
                p
            })
            .collect();
        self.derive(self.users.clone(), posts, self.edges.clone())
    }

    /// Users with at least `min_checkins` check-ins spread over at least
    /// `min_distinct` different locations.
    pub fn filter_location_users(&self, min_distinct: usize, min_checkins: usize) -> BTreeSet<UserId> {
        self.index
            .locations
            .iter()
            .filter(|(_, visits)| {
                let total: u32 = visits.values().sum();
                visits.len() >= min_distinct && total as usize >= min_checkins
            })
            .map(|(&u, _)| u)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::super::{Post, DEFAULT_CATEGORIES};
    use super::*;

    #[test]
    fn nearest_rank_by_hand() {
        let degrees: Vec<usize> = (1..=100).collect();
        assert_eq!(percentile_window(&degrees, 0.10, 0.90), Some((10, 90)));
        assert_eq!(nearest_rank(&[5], 0.1), Some(5));
        assert_eq!(nearest_rank(&[3, 8], 0.0), Some(3));
        assert_eq!(nearest_rank(&[], 0.5), None);
        // n = 7: ranks ceil(0.7) = 1, ceil(6.3) = 7
        assert_eq!(percentile_window(&[1, 2, 2, 3, 4, 6, 9], 0.1, 0.9), Some((1, 9)));
    }

    /// Star centred on user 0 with `leaves` leaves, plus isolated users.
    fn star(leaves: u64, isolated: u64) -> Dataset {
        let posts: Vec<Post> = (0..=leaves + isolated).map(|u| post(u, u, &[], "")).collect();
        let edges: Vec<(u64, u64)> = (1..=leaves).map(|l| (0, l)).collect();
        dataset(posts, &edges)
    }

    #[test]
    fn account_filter_trims_tails() {
        // followers: hub 9, nine leaves 1, ten isolated 0 -> census of 20
        let d = star(9, 10);
        let (lo, hi) = percentile_window(d.follower_census(), 0.1, 0.9).unwrap();
        assert_eq!((lo, hi), (0, 1));
        let f = d.filter_accounts(0.1, 0.9);
        assert!(!f.users().contains(&UserId(0)));
        assert_eq!(f.users().len(), 19);
        assert!(f.edges().is_empty());
        assert!(f.posts().iter().all(|p| p.author != UserId(0)));
        assert!(f.index_is_consistent());
    }

    #[test]
    fn account_filter_degenerate_cases() {
        let ring: Vec<(u64, u64)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let d = dataset((0..6).map(|u| post(u, u, &[], "")).collect(), &ring);
        assert_eq!(d.filter_accounts(0.1, 0.9).users().len(), 6);
        let single = dataset(vec![post(0, 4, &[], "")], &[]);
        assert_eq!(single.filter_accounts(0.1, 0.9).users().len(), 1);
    }

    #[test]
    fn account_filter_is_idempotent() {
        let d = star(9, 10);
        let once = d.filter_accounts(0.1, 0.9);
        let twice = once.filter_accounts(0.1, 0.9);
        assert_eq!(once.users(), twice.users());
        assert_eq!(once.edges(), twice.edges());
    }

    fn tag_spread(counts: &[(&str, usize)]) -> Dataset {
        let n_users = counts.iter().map(|c| c.1).max().unwrap() as u64;
        let posts = (0..n_users)
            .map(|u| {
                let tags: Vec<&str> = counts
                    .iter()
                    .filter(|(_, n)| (u as usize) < *n)
                    .map(|(t, _)| *t)
                    .collect();
                let text: Vec<String> = counts
                    .iter()
                    .filter(|(_, n)| (u as usize) < *n)
                    .map(|(t, _)| format!("w{t}"))
                    .collect();
                post(u, u, &tags, &text.join(" "))
            })
            .collect();
        dataset(posts, &[])
    }

    #[test]
    fn hashtag_filter_band() {
        let d = tag_spread(&[("one", 1), ("five", 5), ("eleven", 11), ("two", 2), ("ten", 10)]);
        let f = d.filter_hashtags(2, 10);
        let kept: Vec<&String> = f.index().hashtag_users.keys().collect();
        assert_eq!(kept, ["five", "ten", "two"]);
        assert!(f.index_is_consistent());
        for (u, counts) in &f.index().hashtags {
            for (h, n) in counts {
                assert!(*n <= d.index().hashtags[u][h]);
            }
        }
        let again = f.filter_hashtags(2, 10);
        assert_eq!(again.posts(), f.posts());
    }

    #[test]
    fn token_filter_band() {
        let d = tag_spread(&[("a", 1), ("b", 50), ("c", 101), ("d", 2), ("e", 100)]);
        let f = d.filter_tokens(2, 100);
        let kept: Vec<&String> = f.index().token_users.keys().collect();
        assert_eq!(kept, ["wb", "wd", "we"]);
        assert_eq!(f.filter_tokens(2, 100).posts(), f.posts());
        let none = d.filter_tokens(200, 300);
        assert!(none.index().token_users.is_empty());
    }

    #[test]
    fn location_eligibility() {
        let mut posts = Vec::new();
        let mut id = 0;
        let mut push = |author: u64, loc: u64, n: usize| {
            for _ in 0..n {
                let mut p = post(id, author, &[], "");
                p.location = Some(loc);
                posts.push(p);
                id += 1;
            }
        };
        push(1, 10, 25); // one place only
        push(2, 10, 10);
        push(2, 11, 10); // 20 check-ins, 2 places
        push(3, 10, 10);
        push(3, 11, 9); // 19 check-ins
        let users = posts.iter().map(|p| p.author).collect();
        let d = Dataset::new(users, posts, vec![], DEFAULT_CATEGORIES).unwrap();
        let eligible = d.filter_location_users(2, 20);
        assert_eq!(eligible.into_iter().collect::<Vec<_>>(), [UserId(2)]);

        // naive recount
        for u in d.users() {
            let mine: Vec<u64> = d.posts().iter().filter(|p| p.author == *u).filter_map(|p| p.location).collect();
            let distinct: BTreeSet<u64> = mine.iter().copied().collect();
            let ok = mine.len() >= 20 && distinct.len() >= 2;
            assert_eq!(ok, d.filter_location_users(2, 20).contains(u));
        }
    }
}
