use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dataset::{
    generate_synthetic, load, load_csv, FeatureDataset, SplitSpec, SyntheticSpec,
};
use crate::methods::MethodSpec;
use crate::nn::TrainConfig;
use crate::noise::{builtin_map, resolve_map, ConfusionMap, NoiseSpec};
use crate::{Error, Result};

/// Overrides the output root of `run`.
pub const OUT_ENV: &str = "NOISECASCADE_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// FVF1 file, or CSV when the extension is `.csv`.
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl DatasetSource {
    pub fn load(&self) -> Result<FeatureDataset> {
        match self {
            Self::File(path) => {
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                    load_csv(path, None)
                } else {
                    load(path)
                }
            }
            Self::Synthetic(spec) => generate_synthetic(spec),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Clean,
    Symmetric,
    Asymmetric,
}

/// A built-in map name or explicit `[from, to]` class-name pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapRef {
    Builtin(String),
    Pairs(Vec<(String, String)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCondition {
    pub kind: ConditionKind,
    #[serde(default)]
    pub rate: f64,
    /// Asymmetric only; defaults to `isic8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapRef>,
}

impl NoiseCondition {
    pub fn clean() -> Self {
        Self {
            kind: ConditionKind::Clean,
            rate: 0.0,
            map: None,
        }
    }

    pub fn symmetric(rate: f64) -> Self {
        Self {
            kind: ConditionKind::Symmetric,
            rate,
            map: None,
        }
    }

    pub fn asymmetric(rate: f64, map: &str) -> Self {
        Self {
            kind: ConditionKind::Asymmetric,
            rate,
            map: Some(MapRef::Builtin(map.into())),
        }
    }

    /// `clean`, `sym-0.40` or `asym-0.40`.
    pub fn label(&self) -> String {
        match self.kind {
            ConditionKind::Clean => "clean".into(),
            ConditionKind::Symmetric => format!("sym-{:.2}", self.rate),
            ConditionKind::Asymmetric => format!("asym-{:.2}", self.rate),
        }
    }

    /// Value of the `noise_kind` CSV column.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ConditionKind::Clean => "clean",
            ConditionKind::Symmetric => "symmetric",
            ConditionKind::Asymmetric => "asymmetric",
        }
    }

    pub fn effective_rate(&self) -> f64 {
        match self.kind {
            ConditionKind::Clean => 0.0,
            _ => self.rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::InvalidConfig(format!(
                "noise rate must be in [0, 1), got {}",
                self.rate
            )));
        }
        if self.kind != ConditionKind::Asymmetric && self.map.is_some() {
            return Err(Error::InvalidConfig("confusion map given for non-asymmetric noise".into()));
        }
        Ok(())
    }

    pub fn resolve_map(&self, class_names: &[String]) -> Result<ConfusionMap> {
        match self.map.as_ref().unwrap_or(&MapRef::Builtin("isic8".into())) {
            MapRef::Builtin(name) => resolve_map(&builtin_map(name)?, class_names),
            MapRef::Pairs(pairs) => resolve_map(pairs, class_names),
        }
    }

    /// Injection spec for this condition, or `None` when clean.
    pub fn noise_spec(&self, class_names: &[String], seed: u64) -> Result<Option<NoiseSpec>> {
        self.validate()?;
        Ok(match self.kind {
            ConditionKind::Clean => None,
            ConditionKind::Symmetric => Some(NoiseSpec::symmetric(self.rate, seed)),
            ConditionKind::Asymmetric => Some(NoiseSpec::asymmetric(
                self.rate,
                self.resolve_map(class_names)?,
                seed,
            )),
        })
    }
}

fn default_noise() -> Vec<NoiseCondition> {
    vec![NoiseCondition::clean()]
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default = "default_noise")]
    pub noise: Vec<NoiseCondition>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Shared training protocol; `train.seed` is replaced by each run's seed.
    #[serde(default)]
    pub train: TrainConfig,
    /// Corrupt validation labels with the same process as training labels.
    #[serde(default = "default_true")]
    pub noisy_val: bool,
    /// Output root; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("config needs at least one method".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("config needs at least one seed".into()));
        }
        if self.noise.is_empty() {
            return Err(Error::InvalidConfig("config needs at least one noise condition".into()));
        }
        for n in &self.noise {
            n.validate()?;
        }
        self.split.validate()?;
        self.train.validate()
    }

    /// The config as a JSON value with `output_dir` removed. Object keys are
    /// sorted, so field order in the source file does not matter.
    pub fn canonical_value(&self) -> Result<Value> {
        let mut c = self.clone();
        c.output_dir = None;
        Ok(serde_json::to_value(&c)?)
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> Result<String> {
        Ok(hash_value(&self.canonical_value()?))
    }

    /// Output root: `$NOISECASCADE_OUT`, else `output_dir`, else `out`.
    pub fn output_root(&self) -> PathBuf {
        std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

pub(crate) fn hash_value(v: &Value) -> String {
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}
