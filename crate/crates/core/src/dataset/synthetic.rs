//! Seeded Gaussian-blob features standing in for frozen backbone embeddings.
//!
//! Class centroids sit on a randomly rotated orthogonal frame scaled so every
//! pair is exactly `centroid_scale` apart (when `d >= K`). Each confusion pair
//! `(a, b)` then pulls `a` toward `b` until they are
//! `proximity_factor * centroid_scale` apart. Samples are isotropic Gaussians
//! with std `sigma` around their class centroid; with `modes_per_class > 1`
//! each class is split across that many sub-centroids offset from the class
//! centroid by `mode_spread` in random directions.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::FeatureDataset;
use crate::rng::{self, Rng};
use crate::{Error, Result};

pub const ISIC_CLASSES: [&str; 8] = ["NV", "BCC", "MEL", "BKL", "AK", "SCC", "DF", "VASC"];
pub const ISIC_TRAIN_COUNTS: [usize; 8] = [6705, 3323, 1113, 1099, 867, 628, 253, 253];
pub const BLOOD_CLASSES: [&str; 8] = ["BAS", "EOS", "ERY", "IG", "LYM", "MON", "NEU", "PLT"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub class_counts: Vec<usize>,
    pub centroid_scale: f64,
    pub sigma: f64,
    #[serde(default)]
    pub confusion_pairs: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub proximity_factor: f64,
    #[serde(default = "one_usize")]
    pub modes_per_class: usize,
    #[serde(default)]
    pub mode_spread: f64,
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl SyntheticSpec {
    /// Eight classes with the ISIC-2019 training counts (54:1 imbalance) and
    /// the four named dermatological confusion pairs pulled together.
    pub fn isic_like(seed: u64) -> Self {
        let idx = |name: &str| ISIC_CLASSES.iter().position(|&c| c == name).unwrap();
        Self {
            num_classes: 8,
            dim: 64,
            class_counts: ISIC_TRAIN_COUNTS.to_vec(),
            centroid_scale: 6.0,
            sigma: 1.0,
            confusion_pairs: vec![
                (idx("MEL"), idx("NV")),
                (idx("BCC"), idx("BKL")),
                (idx("SCC"), idx("AK")),
                (idx("DF"), idx("BKL")),
            ],
            proximity_factor: 0.5,
            modes_per_class: 1,
            mode_spread: 0.0,
            class_names: Some(ISIC_CLASSES.iter().map(|s| s.to_string()).collect()),
            seed,
        }
    }

    /// Eight equally sized classes with blood-cell class names. Each class is
    /// a mixture of three Gaussian modes, so a linear head is not enough.
    pub fn balanced_like(per_class: usize, seed: u64) -> Self {
        Self {
            num_classes: 8,
            dim: 64,
            class_counts: vec![per_class; 8],
            centroid_scale: 4.0,
            sigma: 1.0,
            confusion_pairs: Vec::new(),
            proximity_factor: 1.0,
            modes_per_class: 3,
            mode_spread: 4.0,
            class_names: Some(BLOOD_CLASSES.iter().map(|s| s.to_string()).collect()),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.dim == 0 {
            return Err(Error::InvalidConfig("need K >= 2 and d >= 1".into()));
        }
        if self.class_counts.len() != self.num_classes {
            return Err(Error::InvalidConfig(format!(
                "{} class counts for {} classes",
                self.class_counts.len(),
                self.num_classes
            )));
        }
        if self.class_counts.contains(&0) {
            return Err(Error::InvalidConfig("every class count must be >= 1".into()));
        }
        if !(self.sigma > 0.0) || !(self.centroid_scale >= 0.0) {
            return Err(Error::InvalidConfig("need sigma > 0 and centroid_scale >= 0".into()));
        }
        if !(self.proximity_factor > 0.0 && self.proximity_factor <= 1.0) {
            return Err(Error::InvalidConfig("proximity_factor must be in (0, 1]".into()));
        }
        if self.modes_per_class == 0 || !(self.mode_spread >= 0.0) {
            return Err(Error::InvalidConfig("need modes_per_class >= 1, mode_spread >= 0".into()));
        }
        for &(a, b) in &self.confusion_pairs {
            if a >= self.num_classes || b >= self.num_classes || a == b {
                return Err(Error::InvalidConfig(format!("bad confusion pair ({a}, {b})")));
            }
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.num_classes {
                return Err(Error::InvalidConfig("class_names length != K".into()));
            }
        }
        Ok(())
    }

    /// Class centroids, before any sampling.
    pub fn centroids(&self) -> Result<Array2<f64>> {
        self.validate()?;
        let mut rng = rng::stream(self.seed, rng::streams::HEAD_BASE - 1);
        Ok(self.centroids_with(&mut rng))
    }

    fn centroids_with(&self, rng: &mut Rng) -> Array2<f64> {
        let (k, d) = (self.num_classes, self.dim);
        let radius = self.centroid_scale / 2f64.sqrt();
        let mut frame = gaussian_matrix(rng, k, d);
        if d >= k {
            gram_schmidt(&mut frame);
        } else {
            for mut row in frame.rows_mut() {
                let norm = row.dot(&row).sqrt();
                row /= norm;
            }
        }
        let mut centroids = frame * radius;
        for &(a, b) in &self.confusion_pairs {
            let pulled =
                &centroids.row(b) + &((&centroids.row(a) - &centroids.row(b)) * self.proximity_factor);
            centroids.row_mut(a).assign(&pulled);
        }
        centroids
    }
}

fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

fn gram_schmidt(m: &mut Array2<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let prev: Array1<f64> = m.row(j).to_owned();
            let proj = m.row(i).dot(&prev);
            m.row_mut(i).scaled_add(-proj, &prev);
        }
        let norm = m.row(i).dot(&m.row(i)).sqrt();
        m.row_mut(i).mapv_inplace(|v| v / norm);
    }
}

/// Samples a dataset from `spec`. Rows are grouped by class in label order.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureDataset> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, rng::streams::HEAD_BASE - 1);
    let centroids = spec.centroids_with(&mut rng);
    let d = spec.dim;

    let mut mode_centres = Vec::with_capacity(spec.num_classes);
    for c in 0..spec.num_classes {
        if spec.modes_per_class == 1 {
            mode_centres.push(centroids.row(c).to_owned().insert_axis(ndarray::Axis(0)));
            continue;
        }
        let mut offsets = gaussian_matrix(&mut rng, spec.modes_per_class, d);
        for mut row in offsets.rows_mut() {
            let norm = row.dot(&row).sqrt();
            row *= spec.mode_spread / norm;
        }
        mode_centres.push(offsets + &centroids.row(c));
    }

    let n: usize = spec.class_counts.iter().sum();
    let mut features = Array2::<f32>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, &count) in spec.class_counts.iter().enumerate() {
        for i in 0..count {
            let centre = mode_centres[c].row(i % spec.modes_per_class);
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                features[[row, j]] = (centre[j] + spec.sigma * z) as f32;
            }
            labels.push(c as u16);
            row += 1;
        }
    }

    let names = spec
        .class_names
        .clone()
        .unwrap_or_else(|| FeatureDataset::default_names(spec.num_classes));
    let meta = json!({ "source": "synthetic", "spec": spec });
    FeatureDataset::new(features, labels, spec.num_classes, names, meta)
}
