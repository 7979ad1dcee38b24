//! End-to-end pipeline: preprocessing, pair sampling, feature tables and
//! evaluation under one configuration.

use serde::{Deserialize, Serialize};

use crate::dataset::{build_pairs, AvailabilityRules, Dataset, PairSample};
use crate::embed::EmbedConfig;
use crate::error::{Error, Result};
use crate::evaluate::{self, CvSummary, EvalConfig, FusionReport, RobustnessConfig};
use crate::features::{self, FeatureTable};
use crate::fusion::enumerate_subsets;
use crate::imgfeat;
use crate::modality::Modality;
use crate::rng;
use crate::walkfeat::{self, LocationFeatures, NetworkConfig, NetworkFeatures};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub account_low_pct: f64,
    pub account_high_pct: f64,
    pub hashtag_min_users: usize,
    pub hashtag_max_users: usize,
    pub token_min_users: usize,
    pub token_max_users: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            account_low_pct: 0.10,
            account_high_pct: 0.90,
            hashtag_min_users: 2,
            hashtag_max_users: 10,
            token_min_users: 2,
            token_max_users: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Minimum category probability for an image to count as showing it.
    pub image_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            image_threshold: imgfeat::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub filters: FilterConfig,
    pub availability: AvailabilityRules,
    pub features: FeatureConfig,
    pub location: EmbedConfig,
    pub network: NetworkConfig,
    pub evaluation: EvalConfig,
    pub robustness: RobustnessConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.filters;
        let pct = |p: f64| (0.0..=1.0).contains(&p);
        if !pct(f.account_low_pct) || !pct(f.account_high_pct) || f.account_low_pct > f.account_high_pct {
            return Err(Error::Config(format!(
                "account percentiles [{}, {}] are not a window inside [0, 1]",
                f.account_low_pct, f.account_high_pct
            )));
        }
        if f.hashtag_min_users > f.hashtag_max_users || f.token_min_users > f.token_max_users {
            return Err(Error::Config("filter minimum exceeds its maximum".into()));
        }
        if !(self.features.image_threshold > 0.0 && self.features.image_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "image threshold {} outside (0, 1]",
                self.features.image_threshold
            )));
        }
        for e in [&self.location, &self.network.embed] {
            e.walk.validate()?;
            e.skipgram.validate()?;
        }
        if !(self.network.train_edge_fraction > 0.0 && self.network.train_edge_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "train edge fraction {} outside (0, 1]",
                self.network.train_edge_fraction
            )));
        }
        self.evaluation.validate()?;
        self.robustness.validate()
    }

    /// Account, hashtag and token filters, in that order.
    pub fn preprocess(&self, raw: &Dataset) -> Dataset {
        let f = &self.filters;
        raw.filter_accounts(f.account_low_pct, f.account_high_pct)
            .filter_hashtags(f.hashtag_min_users, f.hashtag_max_users)
            .filter_tokens(f.token_min_users, f.token_max_users)
    }
}

/// A preprocessed dataset together with its labelled pairs.
#[derive(Clone, Debug)]
pub struct Experiment {
    dataset: Dataset,
    pairs: Vec<PairSample>,
}

impl Experiment {
    pub fn prepare(raw: &Dataset, cfg: &ExperimentConfig) -> Result<Experiment> {
        cfg.validate()?;
        let dataset = cfg.preprocess(raw);
        let pairs = build_pairs(&dataset, &cfg.availability, cfg.seed)?;
        Ok(Experiment { dataset, pairs })
    }

    pub fn from_parts(dataset: Dataset, pairs: Vec<PairSample>) -> Experiment {
        Experiment { dataset, pairs }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn pairs(&self) -> &[PairSample] {
        &self.pairs
    }

    pub fn location(&self, cfg: &ExperimentConfig) -> Result<LocationFeatures> {
        walkfeat::location_features(
            &self.dataset,
            &self.pairs,
            &cfg.availability,
            &cfg.location,
            rng::derive(cfg.seed, &[rng::tag::LOCATION]),
        )
    }

    pub fn network(&self, cfg: &ExperimentConfig) -> Result<NetworkFeatures> {
        walkfeat::network_features(
            &self.dataset,
            &self.pairs,
            &cfg.network,
            rng::derive(cfg.seed, &[rng::tag::NETWORK]),
        )
    }

    pub fn feature_table(&self, m: Modality, cfg: &ExperimentConfig) -> Result<FeatureTable> {
        match m {
            Modality::Hashtag => features::hashtag_table(&self.dataset, &self.pairs),
            Modality::Text => features::text_table(&self.dataset, &self.pairs),
            Modality::Image => features::image_table(&self.dataset, &self.pairs, cfg.features.image_threshold),
            Modality::Location => Ok(self.location(cfg)?.table),
            Modality::Network => Ok(self.network(cfg)?.table),
        }
    }

    /// Tables of all five modalities in canonical order.
    pub fn feature_tables(&self, cfg: &ExperimentConfig) -> Result<Vec<FeatureTable>> {
        Modality::ALL.iter().map(|&m| self.feature_table(m, cfg)).collect()
    }

    pub fn evaluate_monomodal(&self, table: &FeatureTable, cfg: &ExperimentConfig) -> Result<CvSummary> {
        evaluate::cross_validate(&self.pairs, table, &cfg.evaluation, cfg.seed)
    }

    /// Multimodal, baseline and every subset adversary.
    pub fn evaluate_fusion(&self, tables: &[FeatureTable], cfg: &ExperimentConfig) -> Result<FusionReport> {
        evaluate::cross_validate_fusion(&self.pairs, tables, &enumerate_subsets(), &cfg.evaluation, cfg.seed)
    }
}
