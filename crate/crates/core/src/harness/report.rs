use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use crate::stats::{cohens_d_paired, paired_t_test};
use crate::{Error, Result};

const BASELINE: &str = "ce";
const ALERT_RECALL: f64 = 0.05;
const ALERT_BASELINE_RECALL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub condition: String,
    pub n: usize,
    pub balacc_mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub balacc_std: f64,
    pub overall_mean: f64,
    /// Mean over seeds of each class's recall.
    pub recall_mean: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub condition: String,
    pub method_a: String,
    pub method_b: String,
    /// Number of seeds both methods ran.
    pub n: usize,
    /// Mean of `balacc(a) - balacc(b)` over paired seeds.
    pub mean_diff: f64,
    pub t: f64,
    pub p: f64,
    /// `None` when the differences are constant and nonzero.
    pub cohens_d: Option<f64>,
    pub stars: String,
    pub vs_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseAlert {
    pub method: String,
    pub condition: String,
    pub class: usize,
    pub class_name: String,
    pub recall: f64,
    pub baseline_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub class_names: Vec<String>,
    pub summary: Vec<SummaryRow>,
    pub comparisons: Vec<Comparison>,
    pub alerts: Vec<CollapseAlert>,
    pub notes: Vec<String>,
}

fn stars(p: f64) -> String {
    if p < 0.01 {
        "**".into()
    } else if p < 0.05 {
        "*".into()
    } else {
        String::new()
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    (mean, (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Methods with `ce` first, then alphabetical.
fn method_order(cells: &BTreeMap<String, Vec<&RunRecord>>) -> Vec<String> {
    let mut names: Vec<String> = cells.keys().cloned().collect();
    names.sort_by_key(|m| (m != BASELINE, m.clone()));
    names
}

fn summarize(method: &str, condition: &str, runs: &[&RunRecord]) -> SummaryRow {
    let bal: Vec<f64> = runs.iter().map(|r| r.test.balanced_accuracy).collect();
    let (balacc_mean, balacc_std) = mean_std(&bal);
    let overall_mean = runs.iter().map(|r| r.test.overall_accuracy).sum::<f64>() / runs.len() as f64;
    let k = runs.iter().map(|r| r.test.per_class_recall.len()).max().unwrap_or(0);
    let recall_mean = (0..k)
        .map(|c| {
            let vals: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.test.per_class_recall.get(c).copied().flatten())
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    SummaryRow {
        method: method.into(),
        condition: condition.into(),
        n: runs.len(),
        balacc_mean,
        balacc_std,
        overall_mean,
        recall_mean,
    }
}

fn compare(condition: &str, a: (&str, &[&RunRecord]), b: (&str, &[&RunRecord])) -> Result<Option<Comparison>> {
    let by_seed = |runs: &[&RunRecord]| -> BTreeMap<u64, f64> {
        runs.iter().map(|r| (r.seed, r.test.balanced_accuracy)).collect()
    };
    let (sa, sb) = (by_seed(a.1), by_seed(b.1));
    let (xs, ys): (Vec<f64>, Vec<f64>) = sa
        .iter()
        .filter_map(|(seed, &x)| sb.get(seed).map(|&y| (x, y)))
        .unzip();
    if xs.len() < 2 {
        return Ok(None);
    }
    let t = paired_t_test(&xs, &ys)?;
    let cohens_d = match cohens_d_paired(&xs, &ys) {
        Ok(d) => Some(d),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let mean_diff = xs.iter().zip(&ys).map(|(x, y)| x - y).sum::<f64>() / xs.len() as f64;
    Ok(Some(Comparison {
        condition: condition.into(),
        method_a: a.0.into(),
        method_b: b.0.into(),
        n: xs.len(),
        mean_diff,
        t: t.t,
        p: t.p,
        cohens_d,
        stars: stars(t.p),
        vs_baseline: b.0 == BASELINE,
    }))
}

/// Aggregates run records into summary rows, paired comparisons and
/// collapse alerts.
pub fn build_report(records: &[RunRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::Empty("run records"));
    }
    let mut grid: BTreeMap<String, BTreeMap<String, Vec<&RunRecord>>> = BTreeMap::new();
    for r in records {
        grid.entry(r.noise_label.clone())
            .or_default()
            .entry(r.method_label.clone())
            .or_default()
            .push(r);
    }
    let class_names = records[0].class_names.clone();
    let mut report = Report {
        class_names: class_names.clone(),
        summary: Vec::new(),
        comparisons: Vec::new(),
        alerts: Vec::new(),
        notes: Vec::new(),
    };

    for (condition, cells) in &grid {
        let methods = method_order(cells);
        for m in &methods {
            report.summary.push(summarize(m, condition, &cells[m]));
        }
        for (i, a) in methods.iter().enumerate() {
            for b in &methods[..i] {
                // `b` precedes `a`, so the baseline always lands in `method_b`.
                match compare(condition, (a, &cells[a]), (b, &cells[b]))? {
                    Some(c) => report.comparisons.push(c),
                    None => report
                        .notes
                        .push(format!("{condition}: {a} vs {b} has fewer than 2 paired seeds")),
                }
            }
        }

        let Some(base) = cells.get(BASELINE) else {
            if methods.len() > 1 || methods[0] != BASELINE {
                report.notes.push(format!(
                    "{condition}: no {BASELINE} records; baseline comparisons and collapse alerts skipped"
                ));
            }
            continue;
        };
        let base_row = summarize(BASELINE, condition, base);
        for m in methods.iter().filter(|m| *m != BASELINE) {
            let row = summarize(m, condition, &cells[m]);
            for (c, (rec, base_rec)) in row.recall_mean.iter().zip(&base_row.recall_mean).enumerate() {
                if let (Some(r), Some(b)) = (rec, base_rec) {
                    if *r < ALERT_RECALL && *b > ALERT_BASELINE_RECALL {
                        report.alerts.push(CollapseAlert {
                            method: m.clone(),
                            condition: condition.clone(),
                            class: c,
                            class_name: class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                            recall: *r,
                            baseline_recall: *b,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

impl Report {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## Balanced accuracy (%)\n");
        let _ = writeln!(s, "| condition | method | n | BalAcc | overall |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for r in &self.summary {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} ± {} | {} |",
                r.condition,
                r.method,
                r.n,
                pct(r.balacc_mean),
                pct(r.balacc_std),
                pct(r.overall_mean)
            );
        }

        let _ = writeln!(s, "\n## Per-class recall (%)\n");
        let _ = writeln!(s, "| condition | method | {} |", self.class_names.join(" | "));
        let _ = writeln!(s, "|---|---|{}", "---|".repeat(self.class_names.len()));
        for r in &self.summary {
            let cells: Vec<String> = r
                .recall_mean
                .iter()
                .map(|v| v.map_or_else(|| "n/a".into(), pct))
                .collect();
            let _ = writeln!(s, "| {} | {} | {} |", r.condition, r.method, cells.join(" | "));
        }

        if !self.comparisons.is_empty() {
            let _ = writeln!(s, "\n## Paired comparisons (BalAcc, a - b)\n");
            let _ = writeln!(s, "| condition | a | b | n | diff (pp) | t | p | d |");
            let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
            for c in &self.comparisons {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {:+.1}{} | {:.3} | {:.4} | {} |",
                    c.condition,
                    c.method_a,
                    c.method_b,
                    c.n,
                    100.0 * c.mean_diff,
                    c.stars,
                    c.t,
                    c.p,
                    c.cohens_d.map_or_else(|| "n/a".into(), |d| format!("{d:.2}"))
                );
            }
            let _ = writeln!(s, "\n`*` p < 0.05, `**` p < 0.01 (two-sided paired t-test).");
        }

        let _ = writeln!(s, "\n## Collapse alerts\n");
        if self.alerts.is_empty() {
            let _ = writeln!(s, "none");
        }
        for a in &self.alerts {
            let _ = writeln!(
                s,
                "- {} at {}: {} recall {}% (ce {}%)",
                a.method,
                a.condition,
                a.class_name,
                pct(a.recall),
                pct(a.baseline_recall)
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "\nnote: {n}");
        }
        s
    }

    /// Writes `summary.csv` and `comparisons.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        let k = self.class_names.len();
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        let mut header: Vec<String> = ["method", "condition", "n", "balacc_mean", "balacc_std", "overall_mean"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..k).map(|c| format!("recall_{c}")));
        w.write_record(&header)?;
        for r in &self.summary {
            let mut row = vec![
                r.method.clone(),
                r.condition.clone(),
                r.n.to_string(),
                r.balacc_mean.to_string(),
                r.balacc_std.to_string(),
                r.overall_mean.to_string(),
            ];
            row.extend((0..k).map(|c| {
                r.recall_mean
                    .get(c)
                    .copied()
                    .flatten()
                    .map_or_else(String::new, |v| v.to_string())
            }));
            w.write_record(&row)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("comparisons.csv"))?;
        w.write_record(["condition", "method_a", "method_b", "n", "mean_diff", "t", "p", "cohens_d", "stars"])?;
        for c in &self.comparisons {
            w.write_record([
                c.condition.clone(),
                c.method_a.clone(),
                c.method_b.clone(),
                c.n.to_string(),
                c.mean_diff.to_string(),
                c.t.to_string(),
                c.p.to_string(),
                c.cohens_d.map_or_else(String::new, |d| d.to_string()),
                c.stars.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
