//! Mini-batch training loop with cosine annealing and early stopping on
//! validation balanced accuracy.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{cosine_lr, softmax_rows, weighted_ce_loss_and_grad, Classifier, Matrix};
use crate::dataset::{class_weights, FeatureDataset};
use crate::rng::{self, streams};
use crate::stats::balanced_accuracy;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr_max: f64,
    pub lr_min: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub label_smoothing: f64,
    pub use_class_weights: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_max: 1e-3,
            lr_min: 0.0,
            max_epochs: 50,
            batch_size: 128,
            patience: 7,
            label_smoothing: 0.0,
            use_class_weights: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_max > self.lr_min && self.lr_min >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need lr_max > lr_min >= 0, got {} / {}",
                self.lr_max, self.lr_min
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::InvalidConfig(format!(
                "label_smoothing must be in [0, 1), got {}",
                self.label_smoothing
            )));
        }
        Ok(())
    }
}

/// Cascade retention rates for one epoch: the fraction of training samples
/// passing the first and second agreement filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Retention {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_balanced_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub retention: Option<Retention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose weights were restored.
    pub best_epoch: usize,
    pub best_val_balanced_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct Trained<C> {
    pub model: C,
    pub report: FitReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once `patience` consecutive epochs fail to strictly improve on the
/// best score seen.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, score: f64) -> StopDecision {
        if score > self.best {
            self.best = score;
            self.best_epoch = epoch;
            self.wait = 0;
            return StopDecision::Improved;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

pub struct EpochContext<'a> {
    /// 0-based epoch index.
    pub epoch: usize,
    pub lr: f64,
    pub batches: &'a [Vec<usize>],
}

#[derive(Debug, Clone, Default)]
pub struct EpochOutput {
    pub train_loss: f64,
    pub retention: Option<Retention>,
}

/// Seeded permutation of `0..n` cut into consecutive batches; the last batch
/// may be short.
pub fn shuffled_batches(n: usize, batch_size: usize, rng: &mut rng::Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

pub fn gather_rows(x: &Matrix, idx: &[usize]) -> Matrix {
    x.select(Axis(0), idx)
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn argmax_rows(logits: &Matrix) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Generic epoch driver shared by every training method.
///
/// Each epoch draws a fresh batch order from the run's shuffle stream, hands
/// it to `train_epoch`, scores the validation set through `predict_val`, and
/// snapshots `state` whenever validation balanced accuracy strictly improves.
/// On return `state` holds the best snapshot.
pub fn run_epochs<S: Clone>(
    state: &mut S,
    n_train: usize,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    mut train_epoch: impl FnMut(&mut S, &EpochContext) -> Result<EpochOutput>,
    predict_val: impl Fn(&S, &Matrix) -> Result<Vec<usize>>,
) -> Result<FitReport> {
    cfg.validate()?;
    if n_train == 0 {
        return Err(Error::Empty("training set"));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let val_x = val.features_f64();
    let val_y = val.labels_usize();
    let mut shuffle = rng::stream(cfg.seed, streams::SHUFFLE);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_state = state.clone();
    let mut history = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let lr = cosine_lr(epoch, cfg);
        let batches = shuffled_batches(n_train, cfg.batch_size, &mut shuffle);
        let out = train_epoch(
            state,
            &EpochContext {
                epoch,
                lr,
                batches: &batches,
            },
        )?;
        let preds = predict_val(state, &val_x)?;
        let score = balanced_accuracy(&preds, &val_y, val.num_classes())?;
        history.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            train_loss: out.train_loss,
            val_balanced_accuracy: score,
            retention: out.retention,
        });
        match stopper.observe(epoch + 1, score) {
            StopDecision::Improved => best_state = state.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    *state = best_state;
    Ok(FitReport {
        history,
        best_epoch: stopper.best_epoch(),
        best_val_balanced_accuracy: stopper.best(),
    })
}

pub(crate) fn check_compatible(
    train: &FeatureDataset,
    val: &FeatureDataset,
    input_dim: usize,
    num_classes: usize,
) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if num_classes < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    for (name, ds) in [("train", train), ("val", val)] {
        if ds.dim() != input_dim || ds.num_classes() != num_classes {
            return Err(Error::Shape(format!(
                "{name} set is d={} K={}, model is d={} K={}",
                ds.dim(),
                ds.num_classes(),
                input_dim,
                num_classes
            )));
        }
    }
    Ok(())
}

/// Per-class weights for `train` under `cfg` (all ones when disabled).
pub(crate) fn training_class_weights(train: &FeatureDataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
    if cfg.use_class_weights {
        class_weights(&train.labels_usize(), train.num_classes())
    } else {
        Ok(vec![1.0; train.num_classes()])
    }
}

/// Trains a single head with class-weighted (optionally smoothed) CE and
/// restores the best-validation weights.
pub fn fit<C: Classifier>(
    mut model: C,
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
) -> Result<Trained<C>> {
    check_compatible(train, val, model.input_dim(), model.num_classes())?;
    let x = train.features_f64();
    let y = train.labels_usize();
    let weights = training_class_weights(train, cfg)?;
    let mut dropout = rng::head_dropout(cfg.seed, 0);

    let report = run_epochs(
        &mut model,
        train.len(),
        val,
        cfg,
        |model, ctx| {
            let mut total = 0.0;
            for idx in ctx.batches {
                let xb = gather_rows(&x, idx);
                let yb: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
                let (logits, cache) = model.forward_train(&xb, &mut dropout)?;
                let out = weighted_ce_loss_and_grad(&logits, &yb, &weights, cfg.label_smoothing)?;
                let grads = model.backward(&cache, &out.grad);
                model.adam_step(&grads, ctx.lr)?;
                total += out.loss * idx.len() as f64;
            }
            Ok(EpochOutput {
                train_loss: total / x.nrows() as f64,
                retention: None,
            })
        },
        |model, vx| Ok(argmax_rows(&model.forward_eval(vx)?)),
    )?;
    Ok(Trained { model, report })
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub classes: Vec<usize>,
    pub probabilities: Array2<f64>,
}

/// Eval-mode class predictions and softmax probabilities.
pub fn predict<C: Classifier>(model: &C, data: &FeatureDataset) -> Result<Prediction> {
    if data.dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "data has d={}, model expects {}",
            data.dim(),
            model.input_dim()
        )));
    }
    let logits = model.forward_eval(&data.features_f64())?;
    Ok(Prediction {
        classes: argmax_rows(&logits),
        probabilities: softmax_rows(&logits),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn early_stopping_patience_one() {
        let mut s = EarlyStopping::new(1);
        assert_eq!(s.observe(1, 0.9), StopDecision::Improved);
        assert_eq!(s.observe(2, 0.8), StopDecision::Stop);
        assert_eq!(s.best_epoch(), 1);
    }

    #[test]
    fn early_stopping_counts_consecutive_misses() {
        let mut s = EarlyStopping::new(3);
        let scores = [0.5, 0.6, 0.6, 0.55, 0.7, 0.7, 0.69, 0.6];
        let decisions: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, &v)| s.observe(i + 1, v))
            .collect();
        assert_eq!(decisions[4], StopDecision::Improved);
        assert_eq!(decisions[7], StopDecision::Stop);
        assert_eq!(s.best_epoch(), 5);
    }

    #[test]
    fn argmax_ties_go_low() {
        let logits = array![[1.0, 1.0, 0.0], [0.0, 2.0, 2.0], [3.0, 1.0, 3.0]];
        assert_eq!(argmax_rows(&logits), vec![0, 1, 0]);
    }

    #[test]
    fn batches_partition_indices() {
        let mut r = rng::stream(5, streams::SHUFFLE);
        let batches = shuffled_batches(10, 4, &mut r);
        assert_eq!(batches.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        let mut all: Vec<usize> = batches.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        assert!(c.validate().is_ok());
        c.patience = 0;
        assert!(c.validate().is_err());
        let c = TrainConfig {
            lr_min: 1e-3,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
