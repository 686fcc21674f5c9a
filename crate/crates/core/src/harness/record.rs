use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{hash_value, NoiseCondition};
use crate::diagnostics::SelectionQuality;
use crate::methods::MethodSpec;
use crate::nn::EpochRecord;
use crate::stats::EvalReport;
use crate::{Error, Result};

/// Agreement selection and loss selection at the same cardinality, both
/// scored against the injection ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionComparison {
    pub agreement: SelectionQuality,
    pub loss_matched: SelectionQuality,
}

/// One (method, noise, seed) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    /// Canonical config the hash was computed from.
    pub config: Value,
    pub method: MethodSpec,
    pub method_label: String,
    pub noise: NoiseCondition,
    pub noise_label: String,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub train_size: usize,
    pub flipped_train: usize,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_balanced_accuracy: f64,
    /// Evaluation on the uncorrupted test labels.
    pub test: EvalReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionComparison>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn verify_hash(&self) -> bool {
        hash_value(&self.config) == self.config_hash
    }

    /// Relative path `<method>/<noise>/<seed>.json`.
    pub fn relative_path(&self) -> std::path::PathBuf {
        Path::new(&self.method_label)
            .join(&self.noise_label)
            .join(format!("{}.json", self.seed))
    }
}

fn collect(dir: &Path, out: &mut Vec<RunRecord>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            collect(&path, out)?;
            continue;
        }
        let is_record = path.extension().is_some_and(|e| e == "json")
            && path
                .file_stem()
                .and_then(|s| s.to_str())
                .is_some_and(|s| s.parse::<u64>().is_ok());
        if !is_record {
            continue;
        }
        let rec: RunRecord = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        if !rec.verify_hash() {
            return Err(Error::Record(format!(
                "{}: config hash does not match embedded config",
                path.display()
            )));
        }
        out.push(rec);
    }
    Ok(())
}

/// Reads every `<seed>.json` record under `dir`, verifying config hashes.
/// Records come back sorted by (noise, method, seed).
pub fn load_records(dir: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    collect(dir.as_ref(), &mut out)?;
    if out.is_empty() {
        return Err(Error::Empty("run records"));
    }
    out.sort_by(|a, b| {
        (&a.noise_label, &a.method_label, a.seed).cmp(&(&b.noise_label, &b.method_label, b.seed))
    });
    Ok(out)
}
