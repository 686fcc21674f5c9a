//! The two clean-sample selection signals.

use crate::nn::{argmax_rows, Matrix};
use crate::{Error, Result};

/// `mask[i] = argmax(logits[i]) == labels[i]`.
pub fn select_by_agreement(logits: &Matrix, labels: &[usize]) -> Result<Vec<bool>> {
    if logits.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows vs {} labels",
            logits.nrows(),
            labels.len()
        )));
    }
    Ok(argmax_rows(logits)
        .into_iter()
        .zip(labels)
        .map(|(p, &y)| p == y)
        .collect())
}

/// Marks the `count` smallest losses; ties go to the lower index.
pub fn select_smallest(losses: &[f64], count: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut mask = vec![false; losses.len()];
    for &i in order.iter().take(count) {
        mask[i] = true;
    }
    mask
}

/// Keeps the `floor(keep_fraction * N)` smallest losses.
pub fn select_by_loss(losses: &[f64], keep_fraction: f64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&keep_fraction) {
        return Err(Error::InvalidConfig(format!(
            "keep_fraction must be in [0, 1], got {keep_fraction}"
        )));
    }
    let count = (keep_fraction * losses.len() as f64 + 1e-9).floor() as usize;
    Ok(select_smallest(losses, count.min(losses.len())))
}

/// Loss mask with exactly as many selections as `reference`.
pub fn select_by_loss_matched(losses: &[f64], reference: &[bool]) -> Result<Vec<bool>> {
    if losses.len() != reference.len() {
        return Err(Error::Shape("loss and reference mask lengths differ".into()));
    }
    let count = reference.iter().filter(|&&m| m).count();
    Ok(select_smallest(losses, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn one_hot_logits_agree_everywhere() {
        let labels = [2, 0, 1, 1];
        let logits = Array2::from_shape_fn((4, 3), |(i, c)| f64::from(u8::from(labels[i] == c)));
        assert!(select_by_agreement(&logits, &labels).unwrap().iter().all(|&m| m));
    }

    #[test]
    fn loss_selection_basics() {
        assert!(select_by_loss(&[3.0, 1.0, 2.0], 1.0).unwrap().iter().all(|&m| m));
        assert_eq!(select_by_loss(&[3.0, 1.0, 2.0], 1.0 / 3.0).unwrap(), vec![false, true, false]);
        assert_eq!(select_smallest(&[1.0, 1.0, 1.0], 2), vec![true, true, false]);
        assert!(select_by_loss(&[1.0], 1.5).is_err());
    }

    #[test]
    fn matched_rate_has_equal_cardinality() {
        let losses = [0.3, 2.0, 0.1, 0.9, 1.4];
        let agree = [true, false, false, true, true];
        let m = select_by_loss_matched(&losses, &agree).unwrap();
        assert_eq!(m.iter().filter(|&&b| b).count(), 3);
        assert_eq!(m, vec![true, false, true, true, false]);
    }

    #[test]
    fn agreement_shape_mismatch() {
        let logits = array![[1.0, 0.0]];
        assert!(select_by_agreement(&logits, &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn agreement_invariant_under_monotone_transform(
            vals in prop::collection::vec(-5.0f64..5.0, 24),
            labels in prop::collection::vec(0usize..4, 6),
            scale in 0.1f64..10.0,
            shift in -3.0f64..3.0,
        ) {
            let logits = Array2::from_shape_vec((6, 4), vals).unwrap();
            let transformed = logits.mapv(|v| (scale * v + shift).exp());
            prop_assert_eq!(
                select_by_agreement(&logits, &labels).unwrap(),
                select_by_agreement(&transformed, &labels).unwrap()
            );
        }
    }
}
