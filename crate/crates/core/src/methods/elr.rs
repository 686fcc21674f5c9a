use ndarray::Array2;

use super::gather_labels;
use crate::dataset::FeatureDataset;
use crate::nn::train::{check_compatible, training_class_weights};
use crate::nn::{
    argmax_rows, gather_rows, run_epochs, softmax_rows, weighted_ce_loss_and_grad, Classifier,
    EpochOutput, Matrix, MlpClassifier, TrainConfig, Trained,
};
use crate::rng;
use crate::{Error, Result};

const CLAMP: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElrConfig {
    pub beta: f64,
    pub lambda: f64,
}

impl Default for ElrConfig {
    fn default() -> Self {
        Self {
            beta: 0.7,
            lambda: 3.0,
        }
    }
}

impl ElrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) || !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ELR needs beta in (0, 1) and lambda >= 0, got {} / {}",
                self.beta, self.lambda
            )));
        }
        Ok(())
    }
}

/// Per-sample exponential moving average of detached softmax outputs.
#[derive(Debug, Clone)]
pub struct ElrTargets {
    targets: Array2<f64>,
    beta: f64,
}

impl ElrTargets {
    pub fn new(n: usize, num_classes: usize, beta: f64) -> Self {
        Self {
            targets: Array2::zeros((n, num_classes)),
            beta,
        }
    }

    /// `t_i <- beta t_i + (1 - beta) p_i` for each row of `probs`.
    pub fn update(&mut self, indices: &[usize], probs: &Matrix) {
        for (r, &i) in indices.iter().enumerate() {
            let mut row = self.targets.row_mut(i);
            row.zip_mut_with(&probs.row(r), |t, &p| *t = self.beta * *t + (1.0 - self.beta) * p);
        }
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    pub fn gather(&self, indices: &[usize]) -> Matrix {
        gather_rows(&self.targets, indices)
    }
}

/// Batch mean of `log(1 - clamp(<p_i, t_i>))` and its gradient with respect
/// to the logits; `t` is treated as constant.
pub fn elr_penalty(logits: &Matrix, targets: &Matrix) -> Result<(f64, Matrix)> {
    if logits.dim() != targets.dim() {
        return Err(Error::Shape(format!(
            "logits {:?} vs targets {:?}",
            logits.dim(),
            targets.dim()
        )));
    }
    let p = softmax_rows(logits);
    let n = logits.nrows() as f64;
    let mut grad = Array2::zeros(logits.dim());
    let mut total = 0.0;
    for i in 0..logits.nrows() {
        let s: f64 = p.row(i).dot(&targets.row(i));
        if s >= CLAMP {
            total += (1.0 - CLAMP).ln();
            continue;
        }
        total += (1.0 - s).ln();
        for c in 0..logits.ncols() {
            grad[[i, c]] = -p[[i, c]] * (targets[[i, c]] - s) / ((1.0 - s) * n);
        }
    }
    Ok((total / n, grad))
}

pub fn train_elr(
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    ec: &ElrConfig,
) -> Result<Trained<MlpClassifier>> {
    ec.validate()?;
    let (d, k) = (train.dim(), train.num_classes());
    check_compatible(train, val, d, k)?;
    let x = train.features_f64();
    let y = train.labels_usize();
    let weights = training_class_weights(train, cfg)?;
    let mut model = MlpClassifier::new(d, k, &mut rng::head_init(cfg.seed, 0))?;
    let mut dropout = rng::head_dropout(cfg.seed, 0);
    let mut ema = ElrTargets::new(train.len(), k, ec.beta);

    let report = run_epochs(
        &mut model,
        train.len(),
        val,
        cfg,
        |model, ctx| {
            let mut total = 0.0;
            for idx in ctx.batches {
                let xb = gather_rows(&x, idx);
                let yb = gather_labels(&y, idx);
                let (logits, cache) = model.forward_train(&xb, &mut dropout)?;
                let mut out = weighted_ce_loss_and_grad(&logits, &yb, &weights, cfg.label_smoothing)?;
                if ec.lambda != 0.0 {
                    ema.update(idx, &softmax_rows(&logits));
                    let (pen, g) = elr_penalty(&logits, &ema.gather(idx))?;
                    out.loss += ec.lambda * pen;
                    out.grad.scaled_add(ec.lambda, &g);
                }
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
