use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tieprobe::dataset::DEFAULT_CATEGORIES;
use tieprobe::experiment::ExperimentConfig;
use tieprobe::synth::SynthConfig;

/// Errors raised by the driver itself, mapped to exit codes in `main`.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    MissingArtifact { path: PathBuf, hint: &'static str },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::MissingArtifact { path, hint } => {
                write!(f, "missing artifact {}: {hint}", path.display())
            }
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Size of the scene-category space of image posteriors.
    pub n_categories: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            n_categories: DEFAULT_CATEGORIES,
        }
    }
}

/// Everything a run can be configured with, one TOML section per part.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub experiment: ExperimentConfig,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.experiment.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()).into())
    }
}
