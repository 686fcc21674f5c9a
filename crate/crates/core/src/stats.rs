//! Evaluation metrics and paired significance tests.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::{Error, Result};

/// Confusion matrix plus the recall-based summaries derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    /// `None` for classes with no test samples.
    pub per_class_recall: Vec<Option<f64>>,
    /// Mean of the defined per-class recalls.
    pub balanced_accuracy: f64,
    pub overall_accuracy: f64,
    /// Max minus min of the defined per-class recalls.
    pub recall_range: f64,
    /// Classes absent from the ground truth, excluded from the mean.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined_classes: Vec<usize>,
}

impl EvalReport {
    pub fn min_recall(&self) -> f64 {
        self.per_class_recall
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn evaluate(preds: &[usize], truths: &[usize], num_classes: usize) -> Result<EvalReport> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &t) in preds.iter().zip(truths) {
        for v in [p, t] {
            if v >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label: v,
                    num_classes,
                });
            }
        }
        confusion[t][p] += 1;
    }

    let per_class_recall: Vec<Option<f64>> = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    let undefined_classes: Vec<usize> = per_class_recall
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.is_none().then_some(c))
        .collect();
    if !undefined_classes.is_empty() {
        log::warn!("classes {undefined_classes:?} have no samples; excluded from balanced accuracy");
    }

    let defined: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    let balanced_accuracy = defined.iter().sum::<f64>() / defined.len() as f64;
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let correct: u64 = (0..num_classes).map(|c| confusion[c][c]).sum();

    Ok(EvalReport {
        confusion,
        per_class_recall,
        balanced_accuracy,
        overall_accuracy: correct as f64 / preds.len() as f64,
        recall_range: max - min,
        undefined_classes,
    })
}

/// Mean per-class recall over the classes present in `truths`.
pub fn balanced_accuracy(preds: &[usize], truths: &[usize], num_classes: usize) -> Result<f64> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            preds.len(),
            truths.len()
        )));
    }
    let mut hits = vec![0u64; num_classes];
    let mut totals = vec![0u64; num_classes];
    for (&p, &t) in preds.iter().zip(truths) {
        if t >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: t,
                num_classes,
            });
        }
        totals[t] += 1;
        if p == t {
            hits[t] += 1;
        }
    }
    let recalls: Vec<f64> = hits
        .iter()
        .zip(&totals)
        .filter(|(_, &n)| n > 0)
        .map(|(&h, &n)| h as f64 / n as f64)
        .collect();
    if recalls.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: usize,
    /// All differences equal: `p` is the exact edge (1 if they are all zero,
    /// 0 otherwise) rather than a t-distribution tail.
    pub zero_variance: bool,
}

fn differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{} vs {} paired values", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidConfig("paired test needs n >= 2".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

fn mean_sd(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Two-sided Student-t survival: `P(|T| > |t|)` with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

/// Paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    let d = differences(a, b)?;
    let n = d.len();
    let df = n - 1;
    let (mean, sd) = mean_sd(&d);
    let all_equal = d.iter().all(|&x| x == d[0]);
    if all_equal || sd == 0.0 {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTest {
            t,
            p,
            df,
            zero_variance: true,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    Ok(TTest {
        t,
        p: student_t_two_sided(t, df as f64),
        df,
        zero_variance: false,
    })
}

/// Cohen's d on difference scores, `mean(a - b) / sd(a - b)`.
///
/// Identical inputs give 0; constant nonzero differences have no defined
/// effect size and are an error.
pub fn cohens_d_paired(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = differences(a, b)?;
    let (mean, sd) = mean_sd(&d);
    if d.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    if sd == 0.0 {
        return Err(Error::Degenerate("zero variance in paired differences".into()));
    }
    Ok(mean / sd)
}
