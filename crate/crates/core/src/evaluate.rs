//! AUC, stratified cross-validation of monomodal and fused attacks, and the
//! post-removal robustness sweep.

use log::warn;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::dataset::{refresh_availability, Dataset, PairSample};
use crate::error::{Error, Result};
use crate::experiment::{Experiment, ExperimentConfig};
use crate::features::FeatureTable;
use crate::forest::{Forest, ForestConfig};
use crate::fusion::{FusionConfig, FusionModel, Posteriors};
use crate::modality::{Modality, ModalitySet};
use crate::rng;

/// Area under the ROC curve in Mann-Whitney form: the probability that a
/// random positive outscores a random negative, ties counting one half.
///
/// Computed from midranks in integer arithmetic (ranks doubled), so the
/// result is exactly `(2·wins + ties) / (2·n_pos·n_neg)`.
pub fn auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass((n_pos > 0) as u8));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank2 = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share the doubled midrank i+j+2
        let mid2 = (i + j + 2) as u64;
        pos_rank2 += mid2 * order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        i = j + 1;
    }
    let u2 = pos_rank2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvSummary {
    pub fold_aucs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over folds (0 for a single fold).
    pub std: f64,
}

impl CvSummary {
    pub fn from_folds(fold_aucs: Vec<f64>) -> CvSummary {
        let (mean, std) = mean_std(&fold_aucs);
        CvSummary { fold_aucs, mean, std }
    }
}

/// Mean and sample standard deviation; NaN mean for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub folds: usize,
    pub forest: ForestConfig,
    pub fusion: FusionConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            forest: ForestConfig::default(),
            fusion: FusionConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("cross-validation needs at least 2 folds".into()));
        }
        self.forest.validate()?;
        self.fusion.validate()
    }
}

/// Stratified fold id per sample: each class is shuffled and dealt out
/// round-robin, so per-class fold sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, &[rng::tag::FOLDS]);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [false, true] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

fn labels(pairs: &[PairSample]) -> Vec<bool> {
    pairs.iter().map(|p| p.friend).collect()
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    rng::derive(seed, &[rng::tag::FOLDS, fold as u64])
}

/// Out-of-fold AUC of a forest on one feature table. Folds are assigned
/// over all pairs, so every attack on the same pair list and seed sees the
/// same partition; pairs without features are left out of both sides.
pub fn cross_validate(pairs: &[PairSample], table: &FeatureTable, cfg: &EvalConfig, seed: u64) -> Result<CvSummary> {
    cfg.validate()?;
    if table.len() != pairs.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            got: table.len(),
        });
    }
    let y = labels(pairs);
    let folds = stratified_folds(&y, cfg.folds, seed);
    let mut aucs = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let (mut x_tr, mut y_tr, mut x_te, mut y_te) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in table.available() {
            let row = table.row(i).unwrap_or_default();
            if folds[i] == f {
                x_te.push(row);
                y_te.push(y[i]);
            } else {
                x_tr.push(row);
                y_tr.push(y[i]);
            }
        }
        let forest = Forest::fit(&x_tr, &y_tr, &cfg.forest, fold_seed(seed, f))?;
        aucs.push(auc(&y_te, &forest.posteriors(&x_te)?)?);
    }
    Ok(CvSummary::from_folds(aucs))
}

/// AUC of a single raw feature column, oriented so that it is at least 0.5.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedAuc {
    pub auc: f64,
    /// Set when low values indicate friends.
    pub flipped: bool,
    /// Set when the column is constant over the available pairs.
    pub constant: bool,
}

pub fn unsupervised_feature_auc(pairs: &[PairSample], table: &FeatureTable, column: usize) -> Result<OrientedAuc> {
    if column >= table.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            got: column + 1,
        });
    }
    let (y, s): (Vec<bool>, Vec<f64>) = table
        .available()
        .map(|i| (pairs[i].friend, table.row(i).unwrap_or_default()[column]))
        .unzip();
    if s.windows(2).all(|w| w[0] == w[1]) {
        auc(&y, &s)?;
        return Ok(OrientedAuc {
            auc: 0.5,
            flipped: false,
            constant: true,
        });
    }
    let a = auc(&y, &s)?;
    Ok(OrientedAuc {
        auc: a.max(1.0 - a),
        flipped: a < 0.5,
        constant: false,
    })
}

/// Out-of-fold scores of one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairScore {
    pub pair: usize,
    pub fold: usize,
    pub posteriors: Posteriors,
    pub multimodal: Option<f64>,
    pub baseline: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetResult {
    pub subset: ModalitySet,
    /// `None` when some fold had no scorable pairs of both classes.
    pub summary: Option<CvSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionReport {
    pub subsets: Vec<SubsetResult>,
    /// Confidence-weighted fusion over every modality with a table.
    pub multimodal: CvSummary,
    /// Simple average over the same modalities.
    pub baseline: CvSummary,
    /// Confidences fitted in each fold.
    pub confidences: Vec<Posteriors>,
    pub scores: Vec<PairScore>,
}

impl FusionReport {
    pub fn subset(&self, s: ModalitySet) -> Option<&CvSummary> {
        self.subsets.iter().find(|r| r.subset == s)?.summary.as_ref()
    }
}

fn scored_auc(y: &[bool], scores: &[Option<f64>]) -> Option<f64> {
    let (ys, ss): (Vec<bool>, Vec<f64>) = y
        .iter()
        .zip(scores)
        .filter_map(|(&l, s)| s.map(|s| (l, s)))
        .unzip();
    auc(&ys, &ss).ok()
}

/// Cross-validated fusion: per fold, a [`FusionModel`] is fitted on the
/// training folds (forests and confidences from an inner split) and every
/// requested subset adversary plus the baseline is scored on the test fold.
pub fn cross_validate_fusion(
    pairs: &[PairSample],
    tables: &[FeatureTable],
    subsets: &[ModalitySet],
    cfg: &EvalConfig,
    seed: u64,
) -> Result<FusionReport> {
    cfg.validate()?;
    if let Some(t) = tables.iter().find(|t| t.len() != pairs.len()) {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            got: t.len(),
        });
    }
    let all: ModalitySet = tables.iter().map(|t| t.modality).collect();
    let y = labels(pairs);
    let folds = stratified_folds(&y, cfg.folds, seed);
    let mut subset_aucs: Vec<Option<Vec<f64>>> = vec![Some(Vec::new()); subsets.len()];
    let (mut multimodal, mut baseline) = (Vec::new(), Vec::new());
    let mut confidences = Vec::new();
    let mut scores = Vec::new();
    for f in 0..cfg.folds {
        let train: Vec<usize> = (0..pairs.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..pairs.len()).filter(|&i| folds[i] == f).collect();
        let model = FusionModel::fit(tables, &y, &train, &cfg.fusion, &cfg.forest, fold_seed(seed, f))?;
        let y_te: Vec<bool> = test.iter().map(|&i| y[i]).collect();
        let post = test
            .iter()
            .map(|&i| model.posteriors(tables, i))
            .collect::<Result<Vec<_>>>()?;
        for (slot, &s) in subset_aucs.iter_mut().zip(subsets) {
            let sc: Vec<Option<f64>> = post.iter().map(|p| model.score(p, s)).collect();
            match (slot.as_mut(), scored_auc(&y_te, &sc)) {
                (Some(v), Some(a)) => v.push(a),
                _ => *slot = None,
            }
        }
        let m: Vec<Option<f64>> = post.iter().map(|p| model.score(p, all)).collect();
        let b: Vec<Option<f64>> = post.iter().map(|p| model.score_baseline(p)).collect();
        multimodal.push(scored_auc(&y_te, &m).ok_or_else(|| Error::Data(format!("fold {f}: fused scores lack a class")))?);
        baseline.push(scored_auc(&y_te, &b).ok_or_else(|| Error::Data(format!("fold {f}: baseline scores lack a class")))?);
        for (k, &i) in test.iter().enumerate() {
            scores.push(PairScore {
                pair: i,
                fold: f,
                posteriors: post[k],
                multimodal: m[k],
                baseline: b[k],
            });
        }
        confidences.push(*model.confidences());
    }
    scores.sort_by_key(|s| s.pair);
    Ok(FusionReport {
        subsets: subsets
            .iter()
            .zip(subset_aucs)
            .map(|(&subset, a)| SubsetResult {
                subset,
                summary: a.map(CvSummary::from_folds),
            })
            .collect(),
        multimodal: CvSummary::from_folds(multimodal),
        baseline: CvSummary::from_folds(baseline),
        confidences,
        scores,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Shares of posts removed; 0 is always evaluated as the reference.
    pub fractions: Vec<f64>,
    /// Independent removal draws averaged per fraction.
    pub repeats: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            repeats: 3,
        }
    }
}

impl RobustnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("robustness needs at least one repeat".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return Err(Error::Config(format!("removal fraction {f} outside [0, 1)")));
        }
        Ok(())
    }
}

/// Removes exactly `floor(fraction · |posts|)` uniformly chosen posts.
pub fn remove_posts(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!("removal fraction {fraction} outside [0, 1)")));
    }
    let n = d.posts().len();
    let k = (fraction * n as f64).floor() as usize;
    let mut rng = rng::stream(seed, &[rng::tag::REMOVAL]);
    let mut drop = vec![false; n];
    for i in index::sample(&mut rng, n, k) {
        drop[i] = true;
    }
    let mut at = 0;
    Ok(d.retain_posts(|_| {
        at += 1;
        !drop[at - 1]
    }))
}

/// Attacks evaluated under post removal.
pub const ROBUSTNESS_ATTACKS: [&str; 4] = ["hashtag", "text", "image", "fusion_HTI"];

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessRow {
    pub fraction: f64,
    pub attack: &'static str,
    /// Mean CV AUC of each removal draw; `None` where the attack could not
    /// be evaluated.
    pub runs: Vec<Option<f64>>,
}

impl RobustnessRow {
    /// Mean and standard deviation over the evaluable draws.
    pub fn summary(&self) -> Option<(f64, f64)> {
        let xs: Vec<f64> = self.runs.iter().flatten().copied().collect();
        (!xs.is_empty()).then(|| mean_std(&xs))
    }
}

fn content_attacks(exp: &Experiment, cfg: &ExperimentConfig) -> Result<[Option<f64>; 4]> {
    let mut tables = Vec::new();
    let mut out = [None; 4];
    for (k, m) in [Modality::Hashtag, Modality::Text, Modality::Image].into_iter().enumerate() {
        let t = exp.feature_table(m, cfg)?;
        match cross_validate(exp.pairs(), &t, &cfg.evaluation, cfg.seed) {
            Ok(s) => out[k] = Some(s.mean),
            Err(e) => warn!("{m} attack not evaluable: {e}"),
        }
        tables.push(t);
    }
    let hti: ModalitySet = "HTI".parse()?;
    match cross_validate_fusion(exp.pairs(), &tables, &[hti], &cfg.evaluation, cfg.seed) {
        Ok(r) => out[3] = r.subset(hti).map(|s| s.mean),
        Err(e) => warn!("HTI fusion not evaluable: {e}"),
    }
    Ok(out)
}

/// Removes shares of the raw posts, re-runs preprocessing and re-evaluates
/// the hashtag, text, image and HTI-fusion attacks on the experiment's
/// pairs. Fraction 0 is prepended when missing and reproduces the
/// unperturbed experiment.
pub fn robustness_sweep(raw: &Dataset, pairs: &[PairSample], cfg: &ExperimentConfig) -> Result<Vec<RobustnessRow>> {
    cfg.robustness.validate()?;
    let mut fractions = cfg.robustness.fractions.clone();
    if !fractions.contains(&0.0) {
        fractions.insert(0, 0.0);
    }
    let mut rows = Vec::new();
    for &f in &fractions {
        let draws = if f == 0.0 { 1 } else { cfg.robustness.repeats };
        let mut runs = vec![Vec::new(); ROBUSTNESS_ATTACKS.len()];
        for r in 0..draws {
            let reduced = remove_posts(raw, f, rng::derive(cfg.seed, &[rng::tag::REMOVAL, r as u64]))?;
            let d = cfg.preprocess(&reduced);
            let pairs = refresh_availability(&d, &cfg.availability, pairs);
            let exp = Experiment::from_parts(d, pairs);
            for (k, a) in content_attacks(&exp, cfg)?.into_iter().enumerate() {
                runs[k].push(a);
            }
        }
        if f == 0.0 {
            // deterministic: every draw would be identical
            for r in &mut runs {
                let v = r[0];
                r.resize(cfg.robustness.repeats, v);
            }
        }
        for (k, attack) in ROBUSTNESS_ATTACKS.into_iter().enumerate() {
            rows.push(RobustnessRow {
                fraction: f,
                attack,
                runs: std::mem::take(&mut runs[k]),
            });
        }
    }
    Ok(rows)
}
