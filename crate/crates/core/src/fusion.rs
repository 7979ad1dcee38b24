//! Confidence-weighted late fusion of the monomodal forests.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::auc;
use crate::features::FeatureTable;
use crate::forest::{Forest, ForestConfig};
use crate::modality::{Modality, ModalitySet};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Share of the training pairs used to fit the forests; the rest yields
    /// the confidence scores.
    pub inner_split: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { inner_split: 0.8 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_split > 0.0 && self.inner_split < 1.0) {
            return Err(Error::Config(format!("inner split {} outside (0, 1)", self.inner_split)));
        }
        Ok(())
    }
}

/// Posterior of each modality for one pair, `None` where unavailable.
pub type Posteriors = [Option<f64>; 5];

/// Every subset adversary: the five singletons, then all subsets of size
/// two to four, then the full set. Within a size, subsets are ordered
/// lexicographically over the canonical H, T, I, L, E order.
pub fn enumerate_subsets() -> Vec<ModalitySet> {
    fn combos(start: usize, k: usize, prefix: &mut Vec<Modality>, out: &mut Vec<ModalitySet>) {
        if k == 0 {
            out.push(prefix.iter().copied().collect());
            return;
        }
        for i in start..=Modality::ALL.len() - k {
            prefix.push(Modality::ALL[i]);
            combos(i + 1, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for k in 1..=Modality::ALL.len() {
        combos(0, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Confidence-weighted mean of the posteriors in `subset`; modalities
/// without a posterior or a confidence are skipped. `None` when nothing in
/// the subset is left.
pub fn combine(posteriors: &Posteriors, confidences: &Posteriors, subset: ModalitySet) -> Option<f64> {
    let (mut num, mut den, mut plain, mut n) = (0.0, 0.0, 0.0, 0usize);
    for m in subset.iter() {
        if let (Some(x), Some(a)) = (posteriors[m.index()], confidences[m.index()]) {
            num += x * a;
            den += a;
            plain += x;
            n += 1;
        }
    }
    match n {
        0 => None,
        // x·a/a can be off by an ulp
        1 => Some(plain),
        // all-zero confidences carry no preference between modalities
        _ if den <= 0.0 => Some(plain / n as f64),
        _ => Some(num / den),
    }
}

/// Unweighted mean of the available posteriors in `subset`.
pub fn average(posteriors: &Posteriors, subset: ModalitySet) -> Option<f64> {
    let xs: Vec<f64> = subset.iter().filter_map(|m| posteriors[m.index()]).collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Stratified split of `idx` into (fit, hold) with `ratio` of each class
/// in the fit part.
pub fn stratified_split(idx: &[usize], labels: &[bool], ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut rng = rng::stream(seed, &[rng::tag::INNER_SPLIT]);
    let (mut fit, mut hold) = (Vec::new(), Vec::new());
    for class in [false, true] {
        let mut members: Vec<usize> = idx.iter().copied().filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let k = (ratio * members.len() as f64).round() as usize;
        fit.extend_from_slice(&members[..k]);
        hold.extend_from_slice(&members[k..]);
    }
    fit.sort_unstable();
    hold.sort_unstable();
    (fit, hold)
}

/// One forest and one confidence per modality.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionModel {
    forests: [Option<Forest>; 5],
    confidences: Posteriors,
}

fn rows<'a>(table: &'a FeatureTable, idx: &[usize], labels: &[bool]) -> (Vec<&'a [f64]>, Vec<bool>) {
    idx.iter()
        .filter_map(|&i| table.row(i).map(|r| (r, labels[i])))
        .unzip()
}

impl FusionModel {
    /// Builds a model from already trained parts.
    pub fn from_parts(forests: [Option<Forest>; 5], confidences: Posteriors) -> Result<Self> {
        for m in Modality::ALL {
            if forests[m.index()].is_none() && confidences[m.index()].is_some() {
                return Err(Error::Config(format!("confidence given for {m} without a forest")));
            }
        }
        if forests.iter().all(Option::is_none) {
            return Err(Error::Data("fusion model without any modality".into()));
        }
        Ok(FusionModel { forests, confidences })
    }

    /// Splits `train` into a fitting part and a confidence part, fits one
    /// forest per table on the first and scores its AUC on the second.
    /// Modalities lacking both classes in either part are dropped.
    pub fn fit(
        tables: &[FeatureTable],
        labels: &[bool],
        train: &[usize],
        cfg: &FusionConfig,
        forest: &ForestConfig,
        seed: u64,
    ) -> Result<FusionModel> {
        cfg.validate()?;
        let (fit_idx, hold_idx) = stratified_split(train, labels, cfg.inner_split, seed);
        let mut forests: [Option<Forest>; 5] = Default::default();
        let mut confidences = [None; 5];
        for table in tables {
            let m = table.modality;
            let (x, y) = rows(table, &fit_idx, labels);
            let (hx, hy) = rows(table, &hold_idx, labels);
            let two_classes = |y: &[bool]| y.contains(&true) && y.contains(&false);
            if !two_classes(&y) || !two_classes(&hy) {
                warn!(
                    "dropping {m} from fusion: {} fitting and {} confidence pairs lack one class",
                    y.len(),
                    hy.len()
                );
                continue;
            }
            let f = Forest::fit(&x, &y, forest, rng::derive(seed, &[rng::tag::FOREST, m.index() as u64]))?;
            let scores = f.posteriors(&hx)?;
            confidences[m.index()] = Some(auc(&hy, &scores)?);
            forests[m.index()] = Some(f);
        }
        FusionModel::from_parts(forests, confidences)
    }

    pub fn forest(&self, m: Modality) -> Option<&Forest> {
        self.forests[m.index()].as_ref()
    }

    pub fn confidence(&self, m: Modality) -> Option<f64> {
        self.confidences[m.index()]
    }

    pub fn confidences(&self) -> &Posteriors {
        &self.confidences
    }

    /// Modalities with a trained forest.
    pub fn modalities(&self) -> ModalitySet {
        Modality::ALL
            .into_iter()
            .filter(|m| self.forests[m.index()].is_some())
            .collect()
    }

    /// Same forests with every confidence replaced by `value`.
    pub fn with_equal_confidences(&self, value: f64) -> FusionModel {
        let mut out = self.clone();
        for m in Modality::ALL {
            if out.forests[m.index()].is_some() {
                out.confidences[m.index()] = Some(value);
            }
        }
        out
    }

    /// Posteriors of pair `i` for every modality with a forest and a row.
    pub fn posteriors(&self, tables: &[FeatureTable], i: usize) -> Result<Posteriors> {
        let mut out = [None; 5];
        for t in tables {
            let m = t.modality;
            if let (Some(f), Some(x)) = (&self.forests[m.index()], t.row(i)) {
                out[m.index()] = Some(f.posterior(x)?);
            }
        }
        Ok(out)
    }

    /// Subset adversary score s^{D′}.
    pub fn score(&self, posteriors: &Posteriors, subset: ModalitySet) -> Option<f64> {
        combine(posteriors, &self.confidences, subset)
    }

    /// Simple-average baseline s^BL over every modality.
    pub fn score_baseline(&self, posteriors: &Posteriors) -> Option<f64> {
        average(posteriors, self.modalities())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(h: Option<f64>, t: Option<f64>) -> Posteriors {
        [h, t, None, None, None]
    }

    #[test]
    fn subset_counts_and_order() {
        let s = enumerate_subsets();
        assert_eq!(s.len(), 31);
        let by_size = |k| s.iter().filter(|x| x.len() == k).count();
        assert_eq!([by_size(1), by_size(2), by_size(3), by_size(4), by_size(5)], [5, 10, 10, 5, 1]);
        let names: Vec<String> = s.iter().map(|x| x.to_string()).collect();
        assert_eq!(&names[..7], ["H", "T", "I", "L", "E", "HT", "HI"]);
        assert_eq!(names[14], "LE");
        assert_eq!(names[30], "HTILE");
        assert!(s.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn weighted_by_hand() {
        let s = combine(&p(Some(0.8), Some(0.4)), &p(Some(0.9), Some(0.6)), ModalitySet::FULL).unwrap();
        assert!((s - 0.64).abs() < 1e-15);
        assert!((average(&p(Some(0.8), Some(0.4)), ModalitySet::FULL).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn missing_modalities_renormalize() {
        let conf = p(Some(0.9), Some(0.6));
        let only_t = p(None, Some(0.3));
        assert_eq!(combine(&only_t, &conf, ModalitySet::FULL), Some(0.3));
        assert_eq!(combine(&only_t, &conf, ModalitySet::single(Modality::Hashtag)), None);
        assert_eq!(average(&only_t, ModalitySet::FULL), Some(0.3));
    }

    #[test]
    fn zero_confidences_fall_back_to_mean() {
        let s = combine(&p(Some(0.2), Some(0.6)), &p(Some(0.0), Some(0.0)), ModalitySet::FULL).unwrap();
        assert!((s - 0.4).abs() < 1e-15);
    }

    #[test]
    fn split_is_stratified_and_covering() {
        let labels: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        let idx: Vec<usize> = (0..50).collect();
        let (a, b) = stratified_split(&idx, &labels, 0.8, 3);
        assert_eq!(a.iter().filter(|&&i| labels[i]).count(), 8);
        assert_eq!(b.iter().filter(|&&i| labels[i]).count(), 2);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, idx);
        assert_eq!((a.clone(), b.clone()), stratified_split(&idx, &labels, 0.8, 3));
    }

    #[test]
    fn from_parts_needs_a_forest() {
        assert!(FusionModel::from_parts(Default::default(), [None; 5]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn combine_is_a_convex_mean(
            xs in proptest::collection::vec(proptest::option::of(0.0..=1.0f64), 5),
            cs in proptest::collection::vec(0.0..=1.0f64, 5),
            bits in 1u8..32,
        ) {
            let post: Posteriors = std::array::from_fn(|i| xs[i]);
            let conf: Posteriors = std::array::from_fn(|i| Some(cs[i]));
            let subset = ModalitySet::from_bits(bits);
            let present: Vec<f64> = subset.iter().filter_map(|m| post[m.index()]).collect();
            match combine(&post, &conf, subset) {
                None => proptest::prop_assert!(present.is_empty()),
                Some(s) => {
                    let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    proptest::prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
                    if present.len() == 1 {
                        proptest::prop_assert_eq!(s.to_bits(), present[0].to_bits());
                    }
                }
            }
            let equal: Posteriors = [Some(0.37); 5];
            let a = combine(&post, &equal, subset);
            let b = average(&post, subset);
            proptest::prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                proptest::prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
