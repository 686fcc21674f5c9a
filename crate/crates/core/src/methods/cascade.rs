use serde::{Deserialize, Serialize};

use super::{gather_labels, masked_weights, select_by_agreement, TrainedModel};
use crate::dataset::FeatureDataset;
use crate::nn::train::{check_compatible, training_class_weights};
use crate::nn::{
    argmax_rows, gather_rows, run_epochs, smoothed_targets, soft_cross_entropy,
    weighted_ce_loss_and_grad, Classifier, EpochOutput, LinearClassifier, Matrix, MlpClassifier,
    Retention, TrainConfig, Trained,
};
use crate::rng::{self, Rng};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeStages {
    /// The linear probe alone.
    LpmOnly,
    /// Linear probe plus one MLP trained on its agreement set.
    LpmLam,
    #[default]
    Full,
}

/// Heads of the agreement cascade. `f1` is linear; `f2` exists only for the
/// full cascade and `f3` for every variant except `LpmOnly`.
#[derive(Debug, Clone)]
pub struct CascadeState {
    pub stages: CascadeStages,
    pub f1: LinearClassifier,
    pub f2: Option<MlpClassifier>,
    pub f3: Option<MlpClassifier>,
    /// Retention rates of the most recent epoch.
    pub r1: f64,
    pub r2: f64,
}

impl CascadeState {
    pub fn inference_head(&self) -> TrainedModel {
        match &self.f3 {
            Some(f3) => TrainedModel::Mlp(f3.clone()),
            None => TrainedModel::Linear(self.f1.clone()),
        }
    }

    fn inference_logits(&self, x: &Matrix) -> Result<Matrix> {
        match &self.f3 {
            Some(f3) => f3.forward_eval(x),
            None => self.f1.forward_eval(x),
        }
    }
}

/// Forward, masked class-weighted CE and one Adam step on `head`. Skips the
/// batch when the mask is empty.
fn masked_step<C: Classifier>(
    head: &mut C,
    xb: &Matrix,
    yb: &[usize],
    class_w: &[f64],
    mask: &[bool],
    lr: f64,
    dropout: &mut Rng,
) -> Result<Option<Matrix>> {
    if !mask.iter().any(|&m| m) {
        return Ok(None);
    }
    let (logits, cache) = head.forward_train(xb, dropout)?;
    let targets = smoothed_targets(yb, head.num_classes(), 0.0);
    let out = soft_cross_entropy(&logits, &targets, &masked_weights(yb, class_w, mask))?;
    let grads = head.backward(&cache, &out.grad);
    head.adam_step(&grads, lr)?;
    Ok(Some(logits))
}

pub fn train_cascade(
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
) -> Result<Trained<CascadeState>> {
    train_cascade_ablation(train, val, cfg, CascadeStages::Full)
}

pub fn train_cascade_ablation(
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    stages: CascadeStages,
) -> Result<Trained<CascadeState>> {
    let (d, k) = (train.dim(), train.num_classes());
    check_compatible(train, val, d, k)?;
    let x = train.features_f64();
    let y = train.labels_usize();
    let weights = training_class_weights(train, cfg)?;
    let f1 = LinearClassifier::new(d, k, &mut rng::head_init(cfg.seed, 0))?;
    let f2 = match stages {
        CascadeStages::Full => Some(MlpClassifier::new(d, k, &mut rng::head_init(cfg.seed, 1))?),
        _ => None,
    };
    let f3 = match stages {
        CascadeStages::LpmOnly => None,
        _ => Some(MlpClassifier::new(d, k, &mut rng::head_init(cfg.seed, 2))?),
    };
    let mut drop1 = rng::head_dropout(cfg.seed, 0);
    let mut drop2 = rng::head_dropout(cfg.seed, 1);
    let mut drop3 = rng::head_dropout(cfg.seed, 2);
    let mut state = CascadeState {
        stages,
        f1,
        f2,
        f3,
        r1: 0.0,
        r2: 0.0,
    };
    let n = train.len() as f64;

    let report = run_epochs(
        &mut state,
        train.len(),
        val,
        cfg,
        |st, ctx| {
            let mut total = 0.0;
            let (mut kept1, mut kept2) = (0usize, 0usize);
            for idx in ctx.batches {
                let xb = gather_rows(&x, idx);
                let yb = gather_labels(&y, idx);

                let (l1, c1) = st.f1.forward_train(&xb, &mut drop1)?;
                let out1 = weighted_ce_loss_and_grad(&l1, &yb, &weights, 0.0)?;
                let g1 = st.f1.backward(&c1, &out1.grad);
                st.f1.adam_step(&g1, ctx.lr)?;
                let mask1 = select_by_agreement(&l1, &yb)?;

                let mask2 = match st.f2.as_mut() {
                    Some(f2) => match masked_step(f2, &xb, &yb, &weights, &mask1, ctx.lr, &mut drop2)? {
                        Some(l2) => {
                            let agree2 = select_by_agreement(&l2, &yb)?;
                            mask1.iter().zip(&agree2).map(|(&a, &b)| a && b).collect()
                        }
                        None => vec![false; mask1.len()],
                    },
                    None => mask1.clone(),
                };
                assert!(
                    mask2.iter().zip(&mask1).all(|(&m2, &m1)| !m2 || m1),
                    "cascade mask2 must be a subset of mask1"
                );
                if let Some(f3) = st.f3.as_mut() {
                    masked_step(f3, &xb, &yb, &weights, &mask2, ctx.lr, &mut drop3)?;
                }

                kept1 += mask1.iter().filter(|&&m| m).count();
                kept2 += mask2.iter().filter(|&&m| m).count();
                total += out1.loss * idx.len() as f64;
            }
            st.r1 = kept1 as f64 / n;
            st.r2 = kept2 as f64 / n;
            Ok(EpochOutput {
                train_loss: total / n,
                retention: Some(Retention { r1: st.r1, r2: st.r2 }),
            })
        },
        |st, vx| Ok(argmax_rows(&st.inference_logits(vx)?)),
    )?;
    Ok(Trained {
        model: state,
        report,
    })
}
