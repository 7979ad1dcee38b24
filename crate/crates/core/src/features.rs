//! Per-pair feature tables aligned with an experiment's pair list.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dataset::{Dataset, PairSample, UserId};
use crate::distance::MEASURE_NAMES;
use crate::error::{Error, Result};
use crate::imgfeat::{self, CategoryIndex};
use crate::modality::Modality;
use crate::tagfeat::{self, HashtagIndex};
use crate::textfeat::TfidfMatrix;

/// One modality's feature vectors; `rows[i]` belongs to `pairs[i]` and is
/// `None` where the modality is unavailable for that pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub modality: Modality,
    pub columns: Vec<String>,
    pub rows: Vec<Option<Vec<f64>>>,
}

impl FeatureTable {
    pub fn new(modality: Modality, columns: Vec<String>, rows: Vec<Option<Vec<f64>>>) -> Result<Self> {
        for r in rows.iter().flatten() {
            if r.len() != columns.len() {
                return Err(Error::DimensionMismatch {
                    expected: columns.len(),
                    got: r.len(),
                });
            }
        }
        Ok(FeatureTable { modality, columns, rows })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.rows.get(i)?.as_deref()
    }

    pub fn available(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|_| i))
    }

    pub fn available_count(&self) -> usize {
        self.rows.iter().flatten().count()
    }

    /// Writes `u,v,label,<columns>` with one line per available pair.
    pub fn write_csv(&self, pairs: &[PairSample], path: &Path) -> Result<()> {
        if pairs.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                got: pairs.len(),
            });
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        write!(w, "u,v,label").map_err(io)?;
        for c in &self.columns {
            write!(w, ",{c}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        for (p, row) in pairs.iter().zip(&self.rows) {
            let Some(row) = row else { continue };
            write!(w, "{},{},{}", p.u, p.v, p.label()).map_err(io)?;
            for x in row {
                write!(w, ",{x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a table written by [`FeatureTable::write_csv`], realigning it
    /// to `pairs`; pairs missing from the file are unavailable.
    pub fn read_csv(modality: Modality, pairs: &[PairSample], path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(l) => l.map_err(|e| Error::io(path, e))?,
            None => return Err(parse_err(1, "missing header".into())),
        };
        let columns: Vec<String> = header.split(',').skip(3).map(str::to_string).collect();
        let slot: BTreeMap<(UserId, UserId), usize> =
            pairs.iter().enumerate().map(|(i, p)| ((p.u, p.v), i)).collect();
        let mut rows = vec![None; pairs.len()];
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = i + 2;
            let mut fields = line.split(',');
            let mut id = || -> Result<u64> {
                fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err(lineno, "bad pair id".into()))
            };
            let (u, v) = (UserId(id()?), UserId(id()?));
            fields.next();
            let values = fields
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(lineno, e.to_string()))?;
            if values.len() != columns.len() {
                return Err(parse_err(lineno, format!("expected {} values, got {}", columns.len(), values.len())));
            }
            let &at = slot
                .get(&(u, v))
                .ok_or_else(|| parse_err(lineno, format!("pair ({u}, {v}) is not in the pair list")))?;
            rows[at] = Some(values);
        }
        FeatureTable::new(modality, columns, rows)
    }
}

fn table_from(
    modality: Modality,
    columns: Vec<String>,
    pairs: &[PairSample],
    mut extract: impl FnMut(UserId, UserId) -> Result<Vec<f64>>,
) -> Result<FeatureTable> {
    let mut rows = Vec::with_capacity(pairs.len());
    for p in pairs {
        if !p.available.contains(modality) {
            rows.push(None);
            continue;
        }
        match extract(p.u, p.v) {
            Ok(x) => rows.push(Some(x)),
            Err(Error::Unavailable { .. }) => rows.push(None),
            Err(e) => return Err(e),
        }
    }
    FeatureTable::new(modality, columns, rows)
}

pub fn distance_columns() -> Vec<String> {
    MEASURE_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn hashtag_table(d: &Dataset, pairs: &[PairSample]) -> Result<FeatureTable> {
    let index = HashtagIndex::build(d)?;
    let columns = tagfeat::FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    table_from(Modality::Hashtag, columns, pairs, |u, v| Ok(index.features(u, v)?.to_vec()))
}

pub fn text_table(d: &Dataset, pairs: &[PairSample]) -> Result<FeatureTable> {
    let m = TfidfMatrix::build(d);
    table_from(Modality::Text, distance_columns(), pairs, |u, v| Ok(m.features(u, v)?.values.to_vec()))
}

pub fn image_table(d: &Dataset, pairs: &[PairSample], threshold: f64) -> Result<FeatureTable> {
    let index = CategoryIndex::build(d, threshold);
    let columns = imgfeat::feature_names(d.n_categories());
    table_from(Modality::Image, columns, pairs, |u, v| index.features(u, v))
}
