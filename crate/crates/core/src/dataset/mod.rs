//! In-memory feature datasets and the utilities around them.

mod io;
mod split;
mod synthetic;

use ndarray::{Array2, Axis};
use serde_json::Value;

use crate::nn::Matrix;
use crate::{Error, Result};

pub use io::{load, load_csv, read_fvf1, save, write_fvf1, FVF1_MAGIC, FVF1_VERSION};
pub use split::{split_indices, stratified_split, SplitIndices, SplitSpec};
pub use synthetic::{generate_synthetic, SyntheticSpec, BLOOD_CLASSES, ISIC_CLASSES, ISIC_TRAIN_COUNTS};

/// `N x d` frozen features with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    features: Array2<f32>,
    labels: Vec<u16>,
    num_classes: usize,
    class_names: Vec<String>,
    meta: Value,
}

impl FeatureDataset {
    pub fn new(
        features: Array2<f32>,
        labels: Vec<u16>,
        num_classes: usize,
        class_names: Vec<String>,
        meta: Value,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Empty("dataset"));
        }
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if num_classes == 0 || num_classes > usize::from(u16::MAX) {
            return Err(Error::InvalidConfig(format!("num_classes {num_classes} out of range")));
        }
        if class_names.len() != num_classes {
            return Err(Error::Shape(format!(
                "{} class names for {} classes",
                class_names.len(),
                num_classes
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| usize::from(y) >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad.into(),
                num_classes,
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Self {
            features: features.as_standard_layout().to_owned(),
            labels,
            num_classes,
            class_names,
            meta,
        })
    }

    /// Default class names `class0..class{K-1}`.
    pub fn default_names(num_classes: usize) -> Vec<String> {
        (0..num_classes).map(|c| format!("class{c}")).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Array2<f32> {
        &self.features
    }

    pub fn features_f64(&self) -> Matrix {
        self.features.mapv(f64::from)
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labels_usize(&self) -> Vec<usize> {
        self.labels.iter().map(|&y| usize::from(y)).collect()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn meta(&self) -> &Value {
        &self.meta
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[usize::from(y)] += 1;
        }
        counts
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            class_names: self.class_names.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Same features with replacement labels.
    pub fn with_labels(&self, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} samples",
                labels.len(),
                self.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| usize::from(y) >= self.num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad.into(),
                num_classes: self.num_classes,
            });
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Index of the class called `name`.
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

/// Inverse-frequency weights `w_c = N / (K * N_c)`.
pub fn class_weights(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let mut counts = vec![0usize; num_classes];
    for &y in labels {
        if y >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes,
            });
        }
        counts[y] += 1;
    }
    let n = labels.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(c, &nc)| {
            if nc == 0 {
                Err(Error::ClassTooSmall {
                    class: c,
                    count: 0,
                    reason: "class weights need every class present",
                })
            } else {
                Ok(n / (num_classes as f64 * nc as f64))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_weights_are_one() {
        let labels = [0, 1, 2, 0, 1, 2];
        assert_eq!(class_weights(&labels, 3).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn imbalanced_weights() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let w = class_weights(&labels, 2).unwrap();
        assert!((w[0] - 100.0 / 180.0).abs() < 1e-15);
        assert!((w[1] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn empty_class_is_error() {
        assert!(class_weights(&[0, 0, 1], 3).is_err());
    }

    #[test]
    fn construction_rejects_bad_labels() {
        let f = Array2::zeros((2, 2));
        let err = FeatureDataset::new(f, vec![0, 2], 2, FeatureDataset::default_names(2), Value::Null);
        assert!(matches!(err, Err(Error::LabelOutOfRange { label: 2, .. })));
    }

    proptest! {
        #[test]
        fn weighted_counts_sum_to_n(labels in prop::collection::vec(0usize..5, 5..200)) {
            let k = 5;
            prop_assume!((0..k).all(|c| labels.contains(&c)));
            let w = class_weights(&labels, k).unwrap();
            let total: f64 = labels.iter().map(|&y| w[y]).sum();
            prop_assert!((total - labels.len() as f64).abs() < 1e-9);
        }
    }
}
