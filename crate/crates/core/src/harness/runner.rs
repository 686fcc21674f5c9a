use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, NoiseCondition};
use super::record::{RunRecord, SelectionComparison};
use crate::dataset::{split_indices, FeatureDataset, SplitIndices};
use crate::diagnostics::selection_quality;
use crate::methods::{
    select_by_agreement, select_by_loss_matched, train_method, MethodSpec, TrainedModel,
};
use crate::nn::{smoothed_targets, soft_cross_entropy, TrainConfig};
use crate::noise::{inject, NoiseRecord};
use crate::stats::evaluate;
use crate::{Error, Result};

/// A loaded dataset and its fixed split, shared by every cell of a sweep.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: FeatureDataset,
    pub split: SplitIndices,
}

impl PreparedData {
    pub fn train(&self) -> FeatureDataset {
        self.dataset.subset(&self.split.train)
    }

    pub fn val(&self) -> FeatureDataset {
        self.dataset.subset(&self.split.val)
    }

    pub fn test(&self) -> FeatureDataset {
        self.dataset.subset(&self.split.test)
    }

    /// Train and val sets with `condition` applied under `seed`, plus the
    /// ground truth for the training part. Train and val are corrupted as one
    /// pool when `noisy_val` is set.
    pub fn corrupted(
        &self,
        condition: &NoiseCondition,
        seed: u64,
        noisy_val: bool,
    ) -> Result<(FeatureDataset, FeatureDataset, NoiseRecord)> {
        let names = self.dataset.class_names();
        let Some(spec) = condition.noise_spec(names, seed)? else {
            let train = self.train();
            let rec = NoiseRecord::clean(train.labels());
            return Ok((train, self.val(), rec));
        };
        let n_train = self.split.train.len();
        if noisy_val {
            let pool_idx: Vec<usize> = self.split.train.iter().chain(&self.split.val).copied().collect();
            let (pool, rec) = inject(&self.dataset.subset(&pool_idx), &spec)?;
            let train_pos: Vec<usize> = (0..n_train).collect();
            let val_pos: Vec<usize> = (n_train..pool_idx.len()).collect();
            let train_rec = NoiseRecord {
                original: rec.original[..n_train].to_vec(),
                observed: rec.observed[..n_train].to_vec(),
            };
            Ok((pool.subset(&train_pos), pool.subset(&val_pos), train_rec))
        } else {
            let (train, rec) = inject(&self.train(), &spec)?;
            Ok((train, self.val(), rec))
        }
    }
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let dataset = cfg.dataset.load()?;
    let split = split_indices(&dataset, &cfg.split)?;
    Ok(PreparedData { dataset, split })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: MethodSpec,
    pub noise: NoiseCondition,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Cells in method, noise, seed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for m in &self.methods {
            for n in &self.noise {
                for &seed in &self.seeds {
                    cells.push(Cell {
                        method: m.clone(),
                        noise: n.clone(),
                        seed,
                    });
                }
            }
        }
        cells
    }
}

/// Quality of `selector`'s agreement mask and of the loss mask with the same
/// number of selections, on the noisy training set.
pub fn selection_comparison(
    selector: &TrainedModel,
    train: &FeatureDataset,
    record: &NoiseRecord,
) -> Result<Option<SelectionComparison>> {
    let logits = selector.forward_eval(&train.features_f64())?;
    let y = train.labels_usize();
    let agreement = select_by_agreement(&logits, &y)?;
    if !agreement.iter().any(|&m| m) {
        return Ok(None);
    }
    let targets = smoothed_targets(&y, train.num_classes(), 0.0);
    let losses = soft_cross_entropy(&logits, &targets, &vec![0.0; y.len()])?.per_sample;
    let loss_mask = select_by_loss_matched(&losses, &agreement)?;
    Ok(Some(SelectionComparison {
        agreement: selection_quality(&agreement, record)?,
        loss_matched: selection_quality(&loss_mask, record)?,
    }))
}

pub fn run_cell(cfg: &ExperimentConfig, data: &PreparedData, cell: &Cell) -> Result<RunRecord> {
    let start = Instant::now();
    let (train, val, record) = data.corrupted(&cell.noise, cell.seed, cfg.noisy_val)?;
    let test = data.test();
    let tc = TrainConfig {
        seed: cell.seed,
        ..cfg.train.clone()
    };
    let outcome = train_method(&cell.method, &train, &val, &tc, cell.noise.effective_rate())?;
    let pred = outcome.model.predict(&test)?;
    let report = evaluate(&pred.classes, &test.labels_usize(), test.num_classes())?;
    let selection = match &outcome.selector {
        Some(sel) => selection_comparison(sel, &train, &record)?,
        None => None,
    };
    let config = cfg.canonical_value()?;
    Ok(RunRecord {
        config_hash: super::config::hash_value(&config),
        config,
        method: cell.method.clone(),
        method_label: cell.method.label(),
        noise: cell.noise.clone(),
        noise_label: cell.noise.label(),
        seed: cell.seed,
        class_names: data.dataset.class_names().to_vec(),
        train_size: train.len(),
        flipped_train: record.num_flipped(),
        history: outcome.report.history,
        best_epoch: outcome.report.best_epoch,
        best_val_balanced_accuracy: outcome.report.best_val_balanced_accuracy,
        test: report,
        selection,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// `<root>/<config-hash>`.
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
}

/// Writes the sweep CSV: one row per record, recall columns sized to the
/// largest K, wall time last.
pub fn write_results_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let k = records.iter().map(|r| r.test.per_class_recall.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["method", "noise_kind", "rate", "seed", "balacc", "overall"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..k).map(|c| format!("recall_{c}")));
    header.push("wall_time_s".into());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.method_label.clone(),
            r.noise.kind_name().to_string(),
            r.noise.effective_rate().to_string(),
            r.seed.to_string(),
            r.test.balanced_accuracy.to_string(),
            r.test.overall_accuracy.to_string(),
        ];
        for c in 0..k {
            row.push(
                r.test
                    .per_class_recall
                    .get(c)
                    .copied()
                    .flatten()
                    .map_or_else(String::new, |v| v.to_string()),
            );
        }
        row.push(format!("{:.3}", r.wall_time_s));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every cell of `cfg` on `jobs` worker threads and persists records
/// under `<out_root>/<config-hash>/`. Results do not depend on `jobs`.
///
/// Completed cells are written even when others fail; the error then names
/// the failures.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path, jobs: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let dir = out_root.join(cfg.hash()?);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&cfg.canonical_value()?)?,
    )?;

    let cells = cfg.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                log::info!("run {} {} seed {}", cell.method.label(), cell.noise.label(), cell.seed);
                run_cell(cfg, &data, cell)
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (cell, res) in cells.iter().zip(results) {
        match res {
            Ok(rec) => {
                let path = dir.join(rec.relative_path());
                std::fs::create_dir_all(path.parent().expect("record path has a parent"))?;
                std::fs::write(&path, serde_json::to_string_pretty(&rec)?)?;
                records.push(rec);
            }
            Err(e) => failures.push(format!(
                "{} {} seed {}: {e}",
                cell.method.label(),
                cell.noise.label(),
                cell.seed
            )),
        }
    }
    write_results_csv(&dir.join("results.csv"), &records)?;
    if !failures.is_empty() {
        return Err(Error::RunsFailed {
            failed: failures.len(),
            total: cells.len(),
            detail: failures.join("; "),
        });
    }
    Ok(ExperimentOutput { dir, records })
}
