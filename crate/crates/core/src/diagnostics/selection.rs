use serde::{Deserialize, Serialize};

use crate::noise::NoiseRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionQuality {
    pub precision: f64,
    pub recall: f64,
    pub selection_fraction: f64,
    pub selected: usize,
    pub selected_clean: usize,
    pub clean: usize,
}

/// Precision and recall of `mask` as a detector of unflipped samples.
pub fn selection_quality(mask: &[bool], record: &NoiseRecord) -> Result<SelectionQuality> {
    let flipped = record.flipped_mask();
    if mask.len() != flipped.len() {
        return Err(Error::Shape(format!(
            "mask has {} entries, record has {}",
            mask.len(),
            flipped.len()
        )));
    }
    let selected = mask.iter().filter(|&&m| m).count();
    if selected == 0 {
        return Err(Error::Empty("selection (precision undefined)"));
    }
    let clean = flipped.iter().filter(|&&f| !f).count();
    let selected_clean = mask.iter().zip(&flipped).filter(|(&m, &f)| m && !f).count();
    Ok(SelectionQuality {
        precision: selected_clean as f64 / selected as f64,
        recall: if clean == 0 {
            0.0
        } else {
            selected_clean as f64 / clean as f64
        },
        selection_fraction: selected as f64 / mask.len() as f64,
        selected,
        selected_clean,
        clean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(flips: &[bool]) -> NoiseRecord {
        NoiseRecord {
            original: vec![0; flips.len()],
            observed: flips.iter().map(|&f| u16::from(f)).collect(),
        }
    }

    #[test]
    fn hand_cases() {
        let flips = [false, false, true, false, true, false, true, false, true, false];
        let rec = record(&flips);
        let clean_mask: Vec<bool> = flips.iter().map(|f| !f).collect();
        let q = selection_quality(&clean_mask, &rec).unwrap();
        assert_eq!((q.precision, q.recall), (1.0, 1.0));

        let q = selection_quality(&[true; 10], &rec).unwrap();
        assert_eq!((q.precision, q.recall), (0.6, 1.0));

        // 5 selected: indices 0, 1, 3, 5 clean and 2 flipped.
        let mut m = [false; 10];
        for i in [0, 1, 2, 3, 5] {
            m[i] = true;
        }
        let q = selection_quality(&m, &rec).unwrap();
        assert!((q.precision - 0.8).abs() < 1e-15);
        assert!((q.recall - 4.0 / 6.0).abs() < 1e-15);
        assert!((q.selection_fraction - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_selection_is_error() {
        assert!(selection_quality(&[false; 3], &record(&[false, true, false])).is_err());
    }

    proptest! {
        #[test]
        fn precision_recall_count_identity(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80)) {
            let mask: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let flips: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(mask.iter().any(|&m| m) && flips.iter().any(|&f| !f));
            let q = selection_quality(&mask, &record(&flips)).unwrap();
            prop_assert!((q.precision * q.selected as f64 - q.recall * q.clean as f64).abs() < 1e-9);
        }
    }
}
