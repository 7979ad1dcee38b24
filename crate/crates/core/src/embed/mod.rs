//! Weighted (node2vec-biased) random walks and skip-gram with negative
//! sampling: the shared engine behind the location and network features.

mod skipgram;
mod walk;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distance::{pairwise, Distances};
use crate::error::{Error, Result};

pub use skipgram::{sgns_gradient, sgns_loss, train_skipgram, SgnsGradient, SkipGramConfig, Trained};
pub use walk::{random_walks, WalkConfig, WalkGraph};

/// Walk and training settings used by both walk-based modalities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub walk: WalkConfig,
    pub skipgram: SkipGramConfig,
}

/// Node vectors indexed by graph node; nodes never visited by a walk have
/// none.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    dim: usize,
    vectors: Vec<Option<Vec<f64>>>,
}

impl Embedding {
    pub fn new(dim: usize, vectors: Vec<Option<Vec<f64>>>) -> Self {
        debug_assert!(vectors.iter().flatten().all(|v| v.len() == dim));
        Embedding { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, node: usize) -> Option<&[f64]> {
        self.vectors.get(node)?.as_deref()
    }

    fn both(&self, a: usize, b: usize) -> Result<(&[f64], &[f64])> {
        match (self.vector(a), self.vector(b)) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::Data(format!("no embedding vector for node {a} or {b}"))),
        }
    }

    /// The eight pairwise measures between two node vectors.
    pub fn distance_features(&self, a: usize, b: usize) -> Result<Distances> {
        let (x, y) = self.both(a, b)?;
        Ok(pairwise(x, y))
    }

    /// Componentwise product of two node vectors.
    pub fn hadamard_features(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        let (x, y) = self.both(a, b)?;
        Ok(hadamard(x, y))
    }
}

pub fn hadamard(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a * b).collect()
}

/// Writes `dim,count` followed by one `id,v_1,..,v_dim` row per vector.
pub fn write_vectors<'a>(
    path: &Path,
    dim: usize,
    rows: impl IntoIterator<Item = (u64, &'a [f64])>,
) -> Result<()> {
    let rows: Vec<(u64, &[f64])> = rows.into_iter().collect();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{dim},{}", rows.len()).map_err(io)?;
    for (id, v) in rows {
        write!(w, "{id}").map_err(io)?;
        for x in v {
            write!(w, ",{x}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_vectors(path: &Path) -> Result<(usize, Vec<(u64, Vec<f64>)>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "missing header".into())),
    };
    let (dim, count) = header
        .split_once(',')
        .and_then(|(d, c)| Some((d.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
        .ok_or_else(|| parse_err(1, format!("bad header {header:?}")))?;
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split(',');
        let id = fields
            .next()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| parse_err(i + 1, "bad node id".into()))?;
        let v = fields
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        if v.len() != dim {
            return Err(parse_err(i + 1, format!("expected {dim} values, got {}", v.len())));
        }
        rows.push((id, v));
    }
    if rows.len() != count {
        return Err(parse_err(1, format!("header announces {count} rows, found {}", rows.len())));
    }
    Ok((dim, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_by_hand() {
        let e = Embedding::new(2, vec![Some(vec![1.0, 2.0]), Some(vec![3.0, -1.0]), Some(vec![1.0, 1.0]), None]);
        assert_eq!(e.hadamard_features(0, 1).unwrap(), [3.0, -2.0]);
        assert_eq!(e.hadamard_features(1, 0).unwrap(), [3.0, -2.0]);
        assert_eq!(e.hadamard_features(0, 2).unwrap(), [1.0, 2.0]);
        assert!(e.hadamard_features(0, 3).is_err());
    }

    #[test]
    fn distance_features_identity() {
        let e = Embedding::new(3, vec![Some(vec![0.3, -0.2, 0.9]), Some(vec![0.3, -0.2, 0.9])]);
        let d = e.distance_features(0, 1).unwrap();
        assert!((d.cosine() - 1.0).abs() < 1e-12);
        assert_eq!(d.euclidean(), 0.0);
    }

    #[test]
    fn vectors_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        let a = vec![0.1 + 0.2, -1e-300, std::f64::consts::PI];
        let b = vec![1.0 / 3.0, 0.0, -2.5e10];
        write_vectors(&path, 3, [(7, a.as_slice()), (42, b.as_slice())]).unwrap();
        let (dim, rows) = read_vectors(&path).unwrap();
        assert_eq!(dim, 3);
        assert_eq!(rows, vec![(7, a), (42, b)]);
    }
}
