//! DivideMix reduced to fixed feature vectors: one network, a per-epoch GMM
//! split of the training losses, sharpened self-targets for the noisy part
//! and feature-space mixup.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};

use super::{gather_labels, gmm_fit_1d};
use crate::dataset::FeatureDataset;
use crate::nn::train::{check_compatible, training_class_weights};
use crate::nn::{
    argmax_rows, gather_rows, run_epochs, smoothed_targets, soft_cross_entropy, softmax_rows,
    weighted_ce_loss_and_grad, Classifier, EpochOutput, Matrix, MlpClassifier, TrainConfig,
    Trained,
};
use crate::rng::{self, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivideMixConfig {
    pub warmup: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub gmm_iters: usize,
    pub gmm_tol: f64,
    /// Posterior above which a sample counts as clean.
    pub clean_threshold: f64,
}

impl Default for DivideMixConfig {
    fn default() -> Self {
        Self {
            warmup: 10,
            alpha: 0.75,
            temperature: 0.5,
            gmm_iters: 50,
            gmm_tol: 1e-6,
            clean_threshold: 0.5,
        }
    }
}

impl DivideMixConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup == 0 || !(self.alpha > 0.0) || !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dividemix-lite needs warmup >= 1, alpha > 0, temperature > 0; got {} / {} / {}",
                self.warmup, self.alpha, self.temperature
            )));
        }
        Ok(())
    }
}

/// `x' = lam x + (1 - lam) x[perm]`, same for targets.
pub fn mixup(x: &Matrix, t: &Matrix, perm: &[usize], lam: f64) -> (Matrix, Matrix) {
    let xp = gather_rows(x, perm);
    let tp = gather_rows(t, perm);
    (lam * x + (1.0 - lam) * &xp, lam * t + (1.0 - lam) * &tp)
}

/// Temperature sharpening `p^(1/T) / sum p^(1/T)` per row.
pub fn sharpen(probs: &Matrix, temperature: f64) -> Matrix {
    let mut out = probs.mapv(|p| p.powf(1.0 / temperature));
    for mut row in out.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

pub fn train_dividemix_lite(
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    dc: &DivideMixConfig,
) -> Result<Trained<MlpClassifier>> {
    dc.validate()?;
    let (d, k) = (train.dim(), train.num_classes());
    check_compatible(train, val, d, k)?;
    let x = train.features_f64();
    let y = train.labels_usize();
    let weights = training_class_weights(train, cfg)?;
    let given = smoothed_targets(&y, k, 0.0);
    let mut model = MlpClassifier::new(d, k, &mut rng::head_init(cfg.seed, 0))?;
    let mut dropout = rng::head_dropout(cfg.seed, 0);
    let mut mix_rng = rng::stream(cfg.seed, streams::MIXUP);
    let beta = Beta::new(dc.alpha, dc.alpha).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let report = run_epochs(
        &mut model,
        train.len(),
        val,
        cfg,
        |model, ctx| {
            let mut total = 0.0;
            if ctx.epoch < dc.warmup {
                for idx in ctx.batches {
                    let xb = gather_rows(&x, idx);
                    let yb = gather_labels(&y, idx);
                    let (logits, cache) = model.forward_train(&xb, &mut dropout)?;
                    let out = weighted_ce_loss_and_grad(&logits, &yb, &weights, 0.0)?;
                    let grads = model.backward(&cache, &out.grad);
                    model.adam_step(&grads, ctx.lr)?;
                    total += out.loss * idx.len() as f64;
                }
                return Ok(EpochOutput {
                    train_loss: total / x.nrows() as f64,
                    retention: None,
                });
            }

            let logits = model.forward_eval(&x)?;
            let losses = soft_cross_entropy(&logits, &given, &vec![0.0; x.nrows()])?.per_sample;
            let targets = match gmm_fit_1d(&losses, dc.gmm_iters, dc.gmm_tol) {
                Ok(split) => {
                    let guess = sharpen(&softmax_rows(&logits), dc.temperature);
                    let mut t = Array2::zeros((x.nrows(), k));
                    for (i, &w) in split.clean_posterior.iter().enumerate() {
                        let src = if w > dc.clean_threshold { &given } else { &guess };
                        t.row_mut(i).assign(&src.row(i));
                    }
                    t
                }
                Err(Error::Degenerate(msg)) => {
                    log::debug!("dividemix-lite epoch {}: {msg}; using given labels", ctx.epoch + 1);
                    given.clone()
                }
                Err(e) => return Err(e),
            };

            for idx in ctx.batches {
                let xb = gather_rows(&x, idx);
                let tb = gather_rows(&targets, idx);
                let sample: f64 = beta.sample(&mut mix_rng);
                let lam = sample.max(1.0 - sample);
                let mut perm: Vec<usize> = (0..idx.len()).collect();
                perm.shuffle(&mut mix_rng);
                let (xm, tm) = mixup(&xb, &tb, &perm, lam);
                let w: Vec<f64> = tm.rows().into_iter().map(|r| r.dot(&ndarray::aview1(&weights))).collect();
                let (logits, cache) = model.forward_train(&xm, &mut dropout)?;
                let out = soft_cross_entropy(&logits, &tm, &w)?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn mixup_with_unit_lambda_is_identity() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let t = array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        let (xm, tm) = mixup(&x, &t, &[2, 0, 1], 1.0);
        assert_eq!(xm, x);
        assert_eq!(tm, t);
    }

    #[test]
    fn mixup_interpolates() {
        let x = array![[0.0], [4.0]];
        let t = array![[1.0, 0.0], [0.0, 1.0]];
        let (xm, tm) = mixup(&x, &t, &[1, 0], 0.75);
        assert_eq!(xm, array![[1.0], [3.0]]);
        assert_eq!(tm, array![[0.75, 0.25], [0.25, 0.75]]);
    }

    #[test]
    fn sharpen_by_hand() {
        let p = array![[0.25, 0.75]];
        let s = sharpen(&p, 0.5);
        assert!((s[[0, 0]] - 0.1).abs() < 1e-15);
        assert!((s[[0, 1]] - 0.9).abs() < 1e-15);
        assert_eq!(sharpen(&p, 1.0), p);
    }
}
