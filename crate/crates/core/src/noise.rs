//! Seeded label-noise injection with per-sample ground truth.
//!
//! Symmetric noise flips exactly `round(eta * N)` samples, each to a uniformly
//! chosen *different* class, so the effective noise rate is `eta`. Asymmetric
//! noise flips exactly `round(eta * N_c)` samples of every mapped class `c` to
//! `map[c]`. Rounding is half-to-even. Features are never touched.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureDataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Symmetric,
    Asymmetric,
}

/// Resolved class-id map for asymmetric noise.
pub type ConfusionMap = BTreeMap<usize, usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    pub confusion_map: ConfusionMap,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn symmetric(rate: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Symmetric,
            rate,
            confusion_map: ConfusionMap::new(),
            seed,
        }
    }

    pub fn asymmetric(rate: f64, confusion_map: ConfusionMap, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Asymmetric,
            rate,
            confusion_map,
            seed,
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::InvalidConfig(format!(
                "noise rate must be in [0, 1), got {}",
                self.rate
            )));
        }
        for (&from, &to) in &self.confusion_map {
            if from == to {
                return Err(Error::InvalidConfig(format!("confusion map self-loop on {from}")));
            }
            if from >= num_classes || to >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label: from.max(to),
                    num_classes,
                });
            }
        }
        if self.kind == NoiseKind::Asymmetric && self.confusion_map.is_empty() {
            return Err(Error::InvalidConfig("asymmetric noise needs a non-empty confusion map".into()));
        }
        Ok(())
    }
}

/// Ground truth of one injection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub original: Vec<u16>,
    pub observed: Vec<u16>,
}

impl NoiseRecord {
    pub fn clean(labels: &[u16]) -> Self {
        Self {
            original: labels.to_vec(),
            observed: labels.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn is_flipped(&self, i: usize) -> bool {
        self.original[i] != self.observed[i]
    }

    pub fn flipped_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_flipped(i)).collect()
    }

    pub fn num_flipped(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_flipped(i)).count()
    }
}

fn flip_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).round_ties_even() as usize).min(n)
}

/// Corrupts the labels of `ds` according to `spec`.
pub fn inject(ds: &FeatureDataset, spec: &NoiseSpec) -> Result<(FeatureDataset, NoiseRecord)> {
    let k = ds.num_classes();
    spec.validate(k)?;
    let original = ds.labels().to_vec();
    let mut observed = original.clone();
    let mut rng = rng::stream(spec.seed, rng::streams::SHUFFLE);

    match spec.kind {
        NoiseKind::Symmetric => {
            if k < 2 {
                return Err(Error::InvalidConfig("symmetric noise needs K >= 2".into()));
            }
            let count = flip_count(spec.rate, ds.len());
            let mut chosen = sample(&mut rng, ds.len(), count).into_vec();
            chosen.sort_unstable();
            for i in chosen {
                let orig = usize::from(original[i]);
                let r = rng.random_range(0..k - 1);
                let target = if r >= orig { r + 1 } else { r };
                observed[i] = target as u16;
            }
        }
        NoiseKind::Asymmetric => {
            for (&from, &to) in &spec.confusion_map {
                let members: Vec<usize> = original
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &y)| (usize::from(y) == from).then_some(i))
                    .collect();
                let count = flip_count(spec.rate, members.len());
                let mut chosen = sample(&mut rng, members.len(), count).into_vec();
                chosen.sort_unstable();
                for j in chosen {
                    observed[members[j]] = to as u16;
                }
            }
        }
    }

    let corrupted = ds.with_labels(observed.clone())?;
    Ok((corrupted, NoiseRecord { original, observed }))
}

/// Named class pairs for the built-in maps.
pub fn builtin_map(name: &str) -> Result<Vec<(&'static str, &'static str)>> {
    match name {
        "isic8" => Ok(vec![("MEL", "NV"), ("BCC", "BKL"), ("SCC", "AK"), ("DF", "BKL")]),
        "bloodmnist8" => Ok(vec![
            ("BAS", "NEU"),
            ("NEU", "EOS"),
            ("EOS", "BAS"),
            ("LYM", "MON"),
            ("MON", "LYM"),
        ]),
        other => Err(Error::UnknownName(format!("confusion map {other:?}"))),
    }
}

/// Resolves name pairs against a dataset's class names.
pub fn resolve_map<S: AsRef<str>>(pairs: &[(S, S)], class_names: &[String]) -> Result<ConfusionMap> {
    let find = |name: &str| {
        class_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownName(format!("class {name:?}")))
    };
    let mut map = ConfusionMap::new();
    for (from, to) in pairs {
        let (a, b) = (find(from.as_ref())?, find(to.as_ref())?);
        if a == b {
            return Err(Error::InvalidConfig(format!("self-loop on {}", from.as_ref())));
        }
        if map.insert(a, b).is_some() {
            return Err(Error::InvalidConfig(format!("class {} mapped twice", from.as_ref())));
        }
    }
    Ok(map)
}
