//! Text adversary: per-user TF-IDF vectors over each user's concatenated
//! captions, compared pairwise with the eight distance measures.

use std::collections::BTreeMap;

use crate::dataset::{Dataset, UserId};
use crate::distance::{pairwise, Distances};
use crate::error::{Error, Result};
use crate::modality::Modality;

/// L2-normalized TF-IDF vectors. A user's whole text is one document.
#[derive(Clone, Debug)]
pub struct TfidfMatrix {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    /// Sparse rows sorted by term index; users without text are absent.
    rows: BTreeMap<UserId, Vec<(u32, f64)>>,
}

/// Inverse document frequency `ln(n_docs / (1 + df))`, unsmoothed.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    (n_docs as f64 / (1.0 + df as f64)).ln()
}

impl TfidfMatrix {
    pub fn build(d: &Dataset) -> Self {
        let idx = d.index();
        let vocabulary: Vec<String> = idx.token_users.keys().cloned().collect();
        let position: BTreeMap<&str, u32> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect();
        let n_docs = idx.tokens.values().filter(|c| !c.is_empty()).count();
        let idf: Vec<f64> = idx
            .token_users
            .values()
            .map(|&df| idf(n_docs, df as usize))
            .collect();

        let mut rows = BTreeMap::new();
        for (&u, counts) in &idx.tokens {
            let total: u32 = counts.values().sum();
            if total == 0 {
                continue;
            }
            let mut row: Vec<(u32, f64)> = counts
                .iter()
                .map(|(t, &n)| {
                    let j = position[t.as_str()];
                    (j, n as f64 / total as f64 * idf[j as usize])
                })
                .collect();
            let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, w) in &mut row {
                    *w /= norm;
                }
            }
            rows.insert(u, row);
        }
        TfidfMatrix { vocabulary, idf, rows }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        let j = self.vocabulary.binary_search_by(|t| t.as_str().cmp(term)).ok()?;
        Some(self.idf[j])
    }

    pub fn has_user(&self, u: UserId) -> bool {
        self.rows.contains_key(&u)
    }

    pub fn sparse(&self, u: UserId) -> Option<&[(u32, f64)]> {
        self.rows.get(&u).map(Vec::as_slice)
    }

    /// The user's vector expanded to `|W|` coordinates.
    pub fn dense(&self, u: UserId) -> Option<Vec<f64>> {
        let row = self.rows.get(&u)?;
        let mut v = vec![0.0; self.vocabulary.len()];
        for &(j, w) in row {
            v[j as usize] = w;
        }
        Some(v)
    }

    /// The eight pairwise measures between two users' vectors.
    pub fn features(&self, u: UserId, v: UserId) -> Result<Distances> {
        match (self.dense(u), self.dense(v)) {
            (Some(a), Some(b)) => Ok(pairwise(&a, &b)),
            _ => Err(Error::Unavailable {
                modality: Modality::Text,
                u: u.0,
                v: v.0,
                reason: "user without text",
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::*;

    #[test]
    fn idf_by_hand() {
        assert!((idf(10, 4) - 2f64.ln()).abs() < 1e-15);
        assert!((idf(10, 4) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(idf(3, 2), 0.0);
    }

    #[test]
    fn term_frequency_and_normalization() {
        // 4 documents; "aa" used by 1 user, "bb" and "cc" by 1, "dd" by 3
        let d = dataset(
            vec![
                post(0, 1, &[], "aa aa bb cc"),
                post(1, 2, &[], "dd"),
                post(2, 3, &[], "dd"),
                post(3, 4, &[], "dd"),
            ],
            &[],
        );
        let m = TfidfMatrix::build(&d);
        let idf_aa = (4.0f64 / 2.0).ln();
        assert!((m.idf_of("aa").unwrap() - idf_aa).abs() < 1e-15);
        assert!((m.idf_of("dd").unwrap() - 0.0).abs() < 1e-15);
        // user 1 raw weights: aa 0.5*idf, bb 0.25*idf, cc 0.25*idf (same idf)
        let v = m.dense(UserId(1)).unwrap();
        let raw = [0.5, 0.25, 0.25];
        let norm = raw.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        assert!((v[0] - 0.5 / norm).abs() < 1e-12);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(v[3], 0.0);
        // "dd" has idf 0, so users 2..4 have zero vectors and degenerate features
        let f = m.features(UserId(2), UserId(3)).unwrap();
        assert!(f.degenerate);
    }

    #[test]
    fn identical_texts_identical_vectors() {
        let d = dataset(
            vec![
                post(0, 1, &[], "red green blue"),
                post(1, 2, &[], "red green blue"),
                post(2, 3, &[], "yellow"),
                post(3, 4, &[], "purple orange"),
                post(4, 5, &[], "grey"),
            ],
            &[],
        );
        let m = TfidfMatrix::build(&d);
        assert_eq!(m.dense(UserId(1)), m.dense(UserId(2)));
        let f = m.features(UserId(1), UserId(2)).unwrap();
        assert!((f.cosine() - 1.0).abs() < 1e-12);
        assert_eq!(f.euclidean(), 0.0);
    }

    #[test]
    fn missing_text_is_unavailable() {
        let d = dataset(vec![post(0, 1, &[], "hello"), post(1, 2, &[], "")], &[]);
        let m = TfidfMatrix::build(&d);
        assert!(!m.has_user(UserId(2)));
        assert!(matches!(m.features(UserId(1), UserId(2)), Err(Error::Unavailable { .. })));
    }
}
