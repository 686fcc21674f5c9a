use ndarray::Array2;

use super::Matrix;
use crate::{Error, Result};

/// Result of a cross-entropy evaluation over a batch.
#[derive(Debug, Clone)]
pub struct LossOutput {
    /// Sample-weighted mean loss, `sum w_i l_i / sum w_i`.
    pub loss: f64,
    /// Exact gradient of `loss` with respect to the logits.
    pub grad: Matrix,
    /// Unweighted per-sample losses `l_i = -sum_c t_ic log p_ic`.
    pub per_sample: Vec<f64>,
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Targets with `1 - eps` on the label and `eps / (K - 1)` elsewhere.
pub fn smoothed_targets(labels: &[usize], num_classes: usize, eps: f64) -> Matrix {
    let off = if num_classes > 1 {
        eps / (num_classes - 1) as f64
    } else {
        0.0
    };
    let mut t = Array2::from_elem((labels.len(), num_classes), off);
    for (i, &y) in labels.iter().enumerate() {
        t[[i, y]] = 1.0 - eps;
    }
    t
}

/// Cross-entropy against soft targets with per-sample weights.
///
/// Samples with weight 0 contribute nothing to the loss or gradient but still
/// get a per-sample loss. An all-zero weight vector yields loss 0 and a zero
/// gradient.
pub fn soft_cross_entropy(
    logits: &Matrix,
    targets: &Matrix,
    sample_weights: &[f64],
) -> Result<LossOutput> {
    let (n, k) = logits.dim();
    if targets.dim() != (n, k) || sample_weights.len() != n {
        return Err(Error::Shape(format!(
            "logits {:?}, targets {:?}, {} weights",
            logits.dim(),
            targets.dim(),
            sample_weights.len()
        )));
    }
    let total_weight: f64 = sample_weights.iter().sum();
    let mut grad = Array2::zeros((n, k));
    let mut per_sample = Vec::with_capacity(n);
    let mut weighted = 0.0;

    for i in 0..n {
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        let mut loss = 0.0;
        for c in 0..k {
            let t = targets[[i, c]];
            if t != 0.0 {
                loss -= t * (row[c] - lse);
            }
        }
        per_sample.push(loss);
        let w = sample_weights[i];
        if w != 0.0 {
            weighted += w * loss;
            let scale = w / total_weight;
            for c in 0..k {
                let p = (row[c] - lse).exp();
                grad[[i, c]] = scale * (p - targets[[i, c]]);
            }
        }
    }

    let loss = if total_weight > 0.0 {
        weighted / total_weight
    } else {
        0.0
    };
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(LossOutput {
        loss,
        grad,
        per_sample,
    })
}

/// Class-weighted cross-entropy with optional label smoothing.
pub fn weighted_ce_loss_and_grad(
    logits: &Matrix,
    labels: &[usize],
    class_weights: &[f64],
    smoothing: f64,
) -> Result<LossOutput> {
    let k = logits.ncols();
    if class_weights.len() != k {
        return Err(Error::Shape(format!(
            "{} class weights for {} classes",
            class_weights.len(),
            k
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            num_classes: k,
        });
    }
    let targets = smoothed_targets(labels, k, smoothing);
    let weights: Vec<f64> = labels.iter().map(|&y| class_weights[y]).collect();
    soft_cross_entropy(logits, &targets, &weights)
}
