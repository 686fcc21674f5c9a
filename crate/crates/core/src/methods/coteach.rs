use super::{gather_labels, masked_weights, select_smallest};
use crate::dataset::FeatureDataset;
use crate::nn::train::{check_compatible, training_class_weights};
use crate::nn::{
    argmax_rows, gather_rows, run_epochs, smoothed_targets, soft_cross_entropy, Classifier,
    EpochOutput, Matrix, MlpClassifier, TrainConfig, Trained,
};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoTeachConfig {
    /// Final forget rate, normally the (approximately known) noise rate.
    pub noise_rate: f64,
    pub ramp_epochs: usize,
}

impl CoTeachConfig {
    pub const DEFAULT_RAMP: usize = 10;

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::InvalidConfig(format!(
                "co-teaching forget rate must be in [0, 1), got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }
}

/// Linear ramp `eta * min(t / T_k, 1)` over the 1-based epoch number `t`, so
/// the full rate is reached at epoch `T_k`.
pub fn forget_rate(epoch: usize, eta: f64, ramp_epochs: usize) -> f64 {
    if ramp_epochs == 0 {
        return eta;
    }
    eta * (epoch as f64 / ramp_epochs as f64).min(1.0)
}

/// Samples each net keeps from a batch of `batch`: `max(1, ceil((1 - f) B))`.
pub fn keep_count(batch: usize, forget: f64) -> usize {
    let raw = ((1.0 - forget) * batch as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(batch)
}

/// Per-sample terms of the class-weighted objective, `w_{y_i} l_i`; these
/// are what the small-loss rule ranks.
fn weighted_per_sample(logits: &Matrix, targets: &Matrix, labels: &[usize], class_w: &[f64]) -> Result<Vec<f64>> {
    let zero = vec![0.0; labels.len()];
    let raw = soft_cross_entropy(logits, targets, &zero)?.per_sample;
    Ok(raw.iter().zip(labels).map(|(l, &y)| class_w[y] * l).collect())
}

/// Two MLPs; each steps on the small-loss samples picked by the other.
/// Returns `net_a`.
pub fn train_co_teaching(
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    cc: &CoTeachConfig,
) -> Result<Trained<MlpClassifier>> {
    cc.validate()?;
    let (d, k) = (train.dim(), train.num_classes());
    check_compatible(train, val, d, k)?;
    let x = train.features_f64();
    let y = train.labels_usize();
    let weights = training_class_weights(train, cfg)?;
    let net_a = MlpClassifier::new(d, k, &mut rng::head_init(cfg.seed, 0))?;
    let net_b = MlpClassifier::new(d, k, &mut rng::head_init(cfg.seed, 1))?;
    let mut drop_a = rng::head_dropout(cfg.seed, 0);
    let mut drop_b = rng::head_dropout(cfg.seed, 1);
    let mut state = (net_a, net_b);

    let report = run_epochs(
        &mut state,
        train.len(),
        val,
        cfg,
        |(a, b), ctx| {
            let forget = forget_rate(ctx.epoch + 1, cc.noise_rate, cc.ramp_epochs);
            let mut total = 0.0;
            for idx in ctx.batches {
                let xb = gather_rows(&x, idx);
                let yb = gather_labels(&y, idx);
                let targets = smoothed_targets(&yb, k, 0.0);
                let (la, ca) = a.forward_train(&xb, &mut drop_a)?;
                let (lb, cb) = b.forward_train(&xb, &mut drop_b)?;
                let loss_a = weighted_per_sample(&la, &targets, &yb, &weights)?;
                let loss_b = weighted_per_sample(&lb, &targets, &yb, &weights)?;
                let keep = keep_count(idx.len(), forget);
                let sel_a = select_smallest(&loss_a, keep);
                let sel_b = select_smallest(&loss_b, keep);

                let out_a = soft_cross_entropy(&la, &targets, &masked_weights(&yb, &weights, &sel_b))?;
                let out_b = soft_cross_entropy(&lb, &targets, &masked_weights(&yb, &weights, &sel_a))?;
                let ga = a.backward(&ca, &out_a.grad);
                a.adam_step(&ga, ctx.lr)?;
                let gb = b.backward(&cb, &out_b.grad);
                b.adam_step(&gb, ctx.lr)?;
                total += out_a.loss * idx.len() as f64;
            }
            Ok(EpochOutput {
                train_loss: total / x.nrows() as f64,
                retention: None,
            })
        },
        |(a, _), vx| Ok(argmax_rows(&a.forward_eval(vx)?)),
    )?;
    Ok(Trained {
        model: state.0,
        report,
    })
}
