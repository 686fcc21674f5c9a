//! Training strategies: the CE family of baselines, Co-Teaching, ELR, the
//! prediction-agreement cascade and a lite DivideMix, plus the selection
//! primitives they share.

mod baseline;
mod cascade;
mod coteach;
mod dividemix;
mod elr;
mod gmm;
mod select;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureDataset;
use crate::nn::{
    argmax_rows, softmax_rows, Classifier, FitReport, LinearClassifier, Matrix, MlpClassifier,
    Prediction, TrainConfig, Trained,
};
use crate::{Error, Result};

pub use baseline::{train_baseline, BaselineVariant, DEFAULT_SMOOTHING};
pub use cascade::{train_cascade, train_cascade_ablation, CascadeStages, CascadeState};
pub use coteach::{forget_rate, keep_count, train_co_teaching, CoTeachConfig};
pub use dividemix::{mixup, sharpen, train_dividemix_lite, DivideMixConfig};
pub use elr::{elr_penalty, train_elr, ElrConfig, ElrTargets};
pub use gmm::{gmm_fit_1d, GmmSplit};
pub use select::{select_by_agreement, select_by_loss, select_by_loss_matched, select_smallest};

/// A trained inference head of either architecture.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Linear(LinearClassifier),
    Mlp(MlpClassifier),
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.input_dim(),
            Self::Mlp(m) => m.input_dim(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Self::Linear(m) => m.num_classes(),
            Self::Mlp(m) => m.num_classes(),
        }
    }

    pub fn forward_eval(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Self::Linear(m) => m.forward_eval(x),
            Self::Mlp(m) => m.forward_eval(x),
        }
    }

    pub fn predict(&self, data: &FeatureDataset) -> Result<Prediction> {
        if data.dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "data has d={}, model expects {}",
                data.dim(),
                self.input_dim()
            )));
        }
        let logits = self.forward_eval(&data.features_f64())?;
        Ok(Prediction {
            classes: argmax_rows(&logits),
            probabilities: softmax_rows(&logits),
        })
    }
}

impl From<LinearClassifier> for TrainedModel {
    fn from(m: LinearClassifier) -> Self {
        Self::Linear(m)
    }
}

impl From<MlpClassifier> for TrainedModel {
    fn from(m: MlpClassifier) -> Self {
        Self::Mlp(m)
    }
}

/// Method choice plus its hyperparameters, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum MethodSpec {
    Ce,
    LinearProbe,
    LabelSmoothing {
        #[serde(default = "default_smoothing")]
        epsilon: f64,
    },
    CoTeaching {
        /// Defaults to the injected noise rate of the condition.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forget_rate: Option<f64>,
        #[serde(default = "default_ramp")]
        ramp_epochs: usize,
    },
    Elr {
        #[serde(default = "default_elr_beta")]
        beta: f64,
        #[serde(default = "default_elr_lambda")]
        lambda: f64,
    },
    Cascade {
        #[serde(default)]
        stages: CascadeStages,
    },
    DividemixLite {
        #[serde(default = "default_warmup")]
        warmup: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_temperature")]
        temperature: f64,
    },
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}
fn default_ramp() -> usize {
    CoTeachConfig::DEFAULT_RAMP
}
fn default_elr_beta() -> f64 {
    ElrConfig::default().beta
}
fn default_elr_lambda() -> f64 {
    ElrConfig::default().lambda
}
fn default_warmup() -> usize {
    DivideMixConfig::default().warmup
}
fn default_alpha() -> f64 {
    DivideMixConfig::default().alpha
}
fn default_temperature() -> f64 {
    DivideMixConfig::default().temperature
}

pub const METHOD_NAMES: [&str; 9] = [
    "ce",
    "linear-probe",
    "label-smoothing",
    "co-teaching",
    "elr",
    "cascade",
    "cascade-lpm-only",
    "cascade-lpm-lam",
    "dividemix-lite",
];

impl MethodSpec {
    /// Parses a bare method name with default hyperparameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "ce" => Self::Ce,
            "linear-probe" => Self::LinearProbe,
            "label-smoothing" => Self::LabelSmoothing {
                epsilon: DEFAULT_SMOOTHING,
            },
            "co-teaching" => Self::CoTeaching {
                forget_rate: None,
                ramp_epochs: CoTeachConfig::DEFAULT_RAMP,
            },
            "elr" => {
                let d = ElrConfig::default();
                Self::Elr {
                    beta: d.beta,
                    lambda: d.lambda,
                }
            }
            "cascade" => Self::Cascade {
                stages: CascadeStages::Full,
            },
            "cascade-lpm-only" => Self::Cascade {
                stages: CascadeStages::LpmOnly,
            },
            "cascade-lpm-lam" => Self::Cascade {
                stages: CascadeStages::LpmLam,
            },
            "dividemix-lite" => {
                let d = DivideMixConfig::default();
                Self::DividemixLite {
                    warmup: d.warmup,
                    alpha: d.alpha,
                    temperature: d.temperature,
                }
            }
            other => return Err(Error::UnknownName(format!("method {other:?}"))),
        })
    }

    /// Short label used in output paths and tables.
    pub fn label(&self) -> String {
        match self {
            Self::Ce => "ce".into(),
            Self::LinearProbe => "linear-probe".into(),
            Self::LabelSmoothing { .. } => "label-smoothing".into(),
            Self::CoTeaching { .. } => "co-teaching".into(),
            Self::Elr { .. } => "elr".into(),
            Self::Cascade { stages } => match stages {
                CascadeStages::Full => "cascade".into(),
                CascadeStages::LpmOnly => "cascade-lpm-only".into(),
                CascadeStages::LpmLam => "cascade-lpm-lam".into(),
            },
            Self::DividemixLite { .. } => "dividemix-lite".into(),
        }
    }
}

/// Everything a harness run needs from a trained method.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub model: TrainedModel,
    pub report: FitReport,
    /// Head whose logits drive the method's own sample selection, when the
    /// method selects samples.
    pub selector: Option<TrainedModel>,
}

/// Trains `spec` on `train`; `noise_rate` feeds Co-Teaching's default forget
/// rate.
pub fn train_method(
    spec: &MethodSpec,
    train: &FeatureDataset,
    val: &FeatureDataset,
    cfg: &TrainConfig,
    noise_rate: f64,
) -> Result<MethodOutcome> {
    let plain = |t: Trained<TrainedModel>| MethodOutcome {
        model: t.model,
        report: t.report,
        selector: None,
    };
    Ok(match spec {
        MethodSpec::Ce => plain(train_baseline(train, val, cfg, BaselineVariant::Ce)?),
        MethodSpec::LinearProbe => plain(train_baseline(train, val, cfg, BaselineVariant::LinearProbe)?),
        MethodSpec::LabelSmoothing { epsilon } => plain(train_baseline(
            train,
            val,
            cfg,
            BaselineVariant::LabelSmoothing { epsilon: *epsilon },
        )?),
        MethodSpec::CoTeaching {
            forget_rate,
            ramp_epochs,
        } => {
            let cc = CoTeachConfig {
                noise_rate: forget_rate.unwrap_or(noise_rate),
                ramp_epochs: *ramp_epochs,
            };
            let t = train_co_teaching(train, val, cfg, &cc)?;
            let model = TrainedModel::Mlp(t.model);
            MethodOutcome {
                selector: Some(model.clone()),
                model,
                report: t.report,
            }
        }
        MethodSpec::Elr { beta, lambda } => {
            let t = train_elr(train, val, cfg, &ElrConfig { beta: *beta, lambda: *lambda })?;
            MethodOutcome {
                model: TrainedModel::Mlp(t.model),
                report: t.report,
                selector: None,
            }
        }
        MethodSpec::Cascade { stages } => {
            let t = train_cascade_ablation(train, val, cfg, *stages)?;
            MethodOutcome {
                model: t.model.inference_head(),
                selector: Some(TrainedModel::Linear(t.model.f1.clone())),
                report: t.report,
            }
        }
        MethodSpec::DividemixLite {
            warmup,
            alpha,
            temperature,
        } => {
            let dc = DivideMixConfig {
                warmup: *warmup,
                alpha: *alpha,
                temperature: *temperature,
                ..DivideMixConfig::default()
            };
            let t = train_dividemix_lite(train, val, cfg, &dc)?;
            let model = TrainedModel::Mlp(t.model);
            MethodOutcome {
                selector: Some(model.clone()),
                model,
                report: t.report,
            }
        }
    })
}

/// Weighted-CE sample weights with unselected samples zeroed.
pub(crate) fn masked_weights(labels: &[usize], class_weights: &[f64], mask: &[bool]) -> Vec<f64> {
    labels
        .iter()
        .zip(mask)
        .map(|(&y, &m)| if m { class_weights[y] } else { 0.0 })
        .collect()
}

pub(crate) fn gather_labels(y: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| y[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in METHOD_NAMES {
            assert_eq!(MethodSpec::from_name(name).unwrap().label(), name);
        }
        assert!(MethodSpec::from_name("sop").is_err());
    }

    #[test]
    fn spec_serde_defaults() {
        let s: MethodSpec = serde_json::from_str(r#"{"name":"elr"}"#).unwrap();
        assert_eq!(s, MethodSpec::Elr { beta: 0.7, lambda: 3.0 });
        let s: MethodSpec = serde_json::from_str(r#"{"name":"cascade","stages":"lpm_lam"}"#).unwrap();
        assert_eq!(s.label(), "cascade-lpm-lam");
        let back: MethodSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
