//! On-disk experiment snapshot: the raw input files, the effective
//! configuration and the sampled pairs, plus derived artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tieprobe::dataset::{load_dataset_with, read_pairs};
use tieprobe::experiment::Experiment;
use tieprobe::{Dataset, FeatureTable, Modality};

use crate::config::{CliError, Config};

pub const CONFIG: &str = "config.toml";
pub const POSTS: &str = "posts.jsonl";
pub const EDGES: &str = "edges.csv";
pub const PAIRS: &str = "pairs.csv";

pub struct Snapshot {
    pub dir: PathBuf,
    pub config: Config,
}

fn require(path: PathBuf, hint: &'static str) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact { path, hint }.into())
    }
}

impl Snapshot {
    pub fn open(dir: &Path) -> Result<Snapshot> {
        const HINT: &str = "create the snapshot with `tieprobe ingest`";
        for name in [POSTS, EDGES, PAIRS] {
            require(dir.join(name), HINT)?;
        }
        let config = Config::load(Some(&require(dir.join(CONFIG), HINT)?))?;
        config.validate()?;
        Ok(Snapshot {
            dir: dir.to_path_buf(),
            config,
        })
    }

    pub fn raw(&self) -> Result<Dataset> {
        Ok(load_dataset_with(
            &self.dir.join(POSTS),
            &self.dir.join(EDGES),
            self.config.data.n_categories,
        )?)
    }

    /// Re-runs the deterministic preprocessing and attaches the stored pairs.
    pub fn experiment(&self) -> Result<Experiment> {
        let raw = self.raw()?;
        let d = self.config.experiment.preprocess(&raw);
        let pairs = read_pairs(&self.dir.join(PAIRS))?;
        Ok(Experiment::from_parts(d, pairs))
    }

    pub fn features_dir(&self) -> Result<PathBuf> {
        let dir = self.dir.join("features");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    pub fn results_dir(&self) -> Result<PathBuf> {
        let dir = self.dir.join("results");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    pub fn features_path(&self, m: Modality) -> PathBuf {
        self.dir.join("features").join(format!("features_{}.csv", m.letter()))
    }

    pub fn load_table(&self, exp: &Experiment, m: Modality) -> Result<FeatureTable> {
        let path = require(self.features_path(m), "compute it with `tieprobe features`")?;
        Ok(FeatureTable::read_csv(m, exp.pairs(), &path)?)
    }
}
