use serde::{Deserialize, Serialize};

use super::config::NoiseCondition;
use super::record::SelectionComparison;
use super::runner::{selection_comparison, PreparedData};
use crate::diagnostics::{feature_geometry, loss_overlap, FeatureGeometry, OverlapReport, DEFAULT_BINS};
use crate::methods::{train_method, MethodSpec};
use crate::nn::{smoothed_targets, soft_cross_entropy, TrainConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub noise: NoiseCondition,
    pub seed: u64,
    pub train: TrainConfig,
    pub noisy_val: bool,
    pub bins: usize,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            noise: NoiseCondition::clean(),
            seed: 0,
            train: TrainConfig::default(),
            noisy_val: true,
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub condition: String,
    pub n_train: usize,
    pub flipped: usize,
    /// Loss distributions of clean vs flipped training samples under a CE
    /// head; `None` when either group is empty.
    pub overlap: Option<OverlapReport>,
    pub geometry_original: FeatureGeometry,
    pub geometry_observed: FeatureGeometry,
    pub selection: Option<SelectionComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Trains CE on the corrupted training set and measures how separable the
/// flipped samples are by loss, how the label groups sit in feature space
/// before and after corruption, and how well prediction agreement finds the
/// clean samples.
pub fn diagnose(data: &PreparedData, opts: &DiagnoseOptions) -> Result<DiagnoseReport> {
    opts.noise.validate()?;
    let (train, val, record) = data.corrupted(&opts.noise, opts.seed, opts.noisy_val)?;
    let tc = TrainConfig {
        seed: opts.seed,
        ..opts.train.clone()
    };
    let outcome = train_method(&MethodSpec::Ce, &train, &val, &tc, opts.noise.effective_rate())?;

    let logits = outcome.model.forward_eval(&train.features_f64())?;
    let y = train.labels_usize();
    let targets = smoothed_targets(&y, train.num_classes(), 0.0);
    let losses = soft_cross_entropy(&logits, &targets, &vec![0.0; y.len()])?.per_sample;
    let flipped = record.flipped_mask();
    let (mut clean, mut noisy) = (Vec::new(), Vec::new());
    for (&l, &f) in losses.iter().zip(&flipped) {
        if f {
            noisy.push(l);
        } else {
            clean.push(l);
        }
    }

    let mut note = None;
    let overlap = if clean.is_empty() || noisy.is_empty() {
        note = Some("no flipped samples; loss overlap undefined".to_string());
        None
    } else {
        Some(loss_overlap(&clean, &noisy, opts.bins)?)
    };

    let original: Vec<usize> = record.original.iter().map(|&c| usize::from(c)).collect();
    let geometry_original = feature_geometry(train.features(), &original, opts.seed)?;
    let geometry_observed = feature_geometry(train.features(), &y, opts.seed)?;
    let selection = selection_comparison(&outcome.model, &train, &record)?;

    Ok(DiagnoseReport {
        condition: opts.noise.label(),
        n_train: train.len(),
        flipped: record.num_flipped(),
        overlap,
        geometry_original,
        geometry_observed,
        selection,
        note,
    })
}
