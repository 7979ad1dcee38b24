//! Image adversary: features from precomputed scene-category posteriors.
//!
//! An image belongs to category `c` when its probability for `c` is at
//! least the threshold; probabilities below it are zeroed everywhere,
//! including the per-category usage vectors.

use std::collections::BTreeMap;

use crate::dataset::{Dataset, UserId};
use crate::error::{Error, Result};
use crate::modality::Modality;
use crate::tagfeat::entropy;

pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Names of the 368 columns: `min_count_0..`, then the three scalars.
pub fn feature_names(n_categories: usize) -> Vec<String> {
    (0..n_categories)
        .map(|c| format!("min_count_{c}"))
        .chain(["x_cosine", "x_F_maxcat", "x_E_maxcat"].map(String::from))
        .collect()
}

#[derive(Clone, Debug)]
pub struct CategoryIndex {
    n_categories: usize,
    threshold: f64,
    /// n_u: images per category.
    counts: BTreeMap<UserId, Vec<u32>>,
    /// s_{c,u}: summed thresholded probabilities, stored per user.
    usage: BTreeMap<UserId, Vec<f64>>,
    /// Entropy of each usage vector s_c across users; `None` when unused.
    category_entropy: Vec<Option<f64>>,
}

impl CategoryIndex {
    pub fn build(d: &Dataset, threshold: f64) -> Self {
        let n = d.n_categories();
        let mut counts: BTreeMap<UserId, Vec<u32>> = BTreeMap::new();
        let mut usage: BTreeMap<UserId, Vec<f64>> = BTreeMap::new();
        for p in d.posts() {
            let Some(image) = &p.image else { continue };
            let c_row = counts.entry(p.author).or_insert_with(|| vec![0; n]);
            let s_row = usage.entry(p.author).or_insert_with(|| vec![0.0; n]);
            for &(c, prob) in image {
                if prob >= threshold {
                    c_row[c as usize] += 1;
                    s_row[c as usize] += prob;
                }
            }
        }
        let category_entropy = (0..n)
            .map(|c| {
                let column: Vec<f64> = usage.values().map(|row| row[c]).collect();
                entropy(&column).ok()
            })
            .collect();
        CategoryIndex {
            n_categories: n,
            threshold,
            counts,
            usage,
            category_entropy,
        }
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn has_user(&self, u: UserId) -> bool {
        self.counts.contains_key(&u)
    }

    pub fn counts(&self, u: UserId) -> Option<&[u32]> {
        self.counts.get(&u).map(Vec::as_slice)
    }

    pub fn usage(&self, u: UserId, c: usize) -> f64 {
        self.usage.get(&u).map_or(0.0, |row| row[c])
    }

    pub fn category_entropy(&self, c: usize) -> Option<f64> {
        self.category_entropy[c]
    }

    /// `min_count` (one column per category), `x_cosine`, `x_F_maxcat`,
    /// `x_E_maxcat`.
    pub fn features(&self, u: UserId, v: UserId) -> Result<Vec<f64>> {
        let (Some(a), Some(b)) = (self.counts.get(&u), self.counts.get(&v)) else {
            return Err(Error::Unavailable {
                modality: Modality::Image,
                u: u.0,
                v: v.0,
                reason: "user without images",
            });
        };
        let mut out = Vec::with_capacity(self.n_categories + 3);
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        let (mut max_cat, mut max_min) = (0usize, 0u32);
        for (c, (&x, &y)) in a.iter().zip(b).enumerate() {
            let m = x.min(y);
            out.push(m as f64);
            if m > max_min {
                max_min = m;
                max_cat = c;
            }
            let (x, y) = (x as f64, y as f64);
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        let cosine = if na > 0.0 && nb > 0.0 {
            dot / (na.sqrt() * nb.sqrt())
        } else {
            0.0
        };
        let e_maxcat = if max_min == 0 {
            0.0
        } else {
            self.category_entropy[max_cat].unwrap_or(0.0)
        };
        out.extend([cosine, max_min as f64, e_maxcat]);
        Ok(out)
    }
}
