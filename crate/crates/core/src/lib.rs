//! Friendship inference from the multimodal footprint of online social
//! network users.
//!
//! The crate extracts five monomodal feature sets for user pairs (hashtags,
//! text, images, locations and a partial friendship graph), trains a random
//! forest per modality, and fuses the forests' posteriors with weights
//! derived from their held-out AUC. A synthetic network generator with
//! planted friendships drives end-to-end validation.
//!
//! Typical flow:
//!
//! ```no_run
//! use tieprobe::{experiment::{Experiment, ExperimentConfig}, synth::{generate, SynthConfig}};
//!
//! let (raw, _truth) = generate(&SynthConfig::default()).unwrap();
//! let cfg = ExperimentConfig::default();
//! let exp = Experiment::prepare(&raw, &cfg).unwrap();
//! let tables = exp.feature_tables(&cfg).unwrap();
//! let fused = exp.evaluate_fusion(&tables, &cfg).unwrap();
//! println!("multimodal AUC {:.3}", fused.multimodal.mean);
//! ```

pub mod dataset;
pub mod distance;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod features;
pub mod forest;
pub mod fusion;
pub mod imgfeat;
pub mod modality;
pub mod rng;
pub mod synth;
pub mod tagfeat;
pub mod textfeat;
pub mod walkfeat;

pub use dataset::{Dataset, PairSample, Post, UserId};
pub use error::{Error, Result};
pub use features::FeatureTable;
pub use forest::Forest;
pub use fusion::FusionModel;
pub use modality::{Modality, ModalitySet};
