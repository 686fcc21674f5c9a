use super::TrainedModel;
use crate::dataset::FeatureDataset;
use crate::nn::{fit, LinearClassifier, MlpClassifier, TrainConfig, Trained};
use crate::rng;
use crate::Result;

pub const DEFAULT_SMOOTHING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineVariant {
    Ce,
    LinearProbe,
    LabelSmoothing { epsilon: f64 },
}

/// Plain class-weighted CE on an MLP or linear head. `Ce` and `LinearProbe`
/// ignore `cfg.label_smoothing`.
pub fn train_baseline(
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    variant: BaselineVariant,
) -> Result<Trained<TrainedModel>> {
    let (d, k) = (train.dim(), train.num_classes());
    let mut init = rng::head_init(cfg.seed, 0);
    let mut cfg = cfg.clone();
    match variant {
        BaselineVariant::LinearProbe => {
            cfg.label_smoothing = 0.0;
            let t = fit(LinearClassifier::new(d, k, &mut init)?, train, val, &cfg)?;
            Ok(Trained {
                model: t.model.into(),
                report: t.report,
            })
        }
        BaselineVariant::Ce | BaselineVariant::LabelSmoothing { .. } => {
            cfg.label_smoothing = match variant {
                BaselineVariant::LabelSmoothing { epsilon } => epsilon,
                _ => 0.0,
            };
            let t = fit(MlpClassifier::new(d, k, &mut init)?, train, val, &cfg)?;
            Ok(Trained {
                model: t.model.into(),
                report: t.report,
            })
        }
    }
}
