use serde::{Deserialize, Serialize};

use super::ks::ks_two_sample;
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub clean_mean: f64,
    pub clean_std: f64,
    pub noisy_mean: f64,
    pub noisy_std: f64,
    pub overlap: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub bins: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn pmf(v: &[f64], lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &x in v {
        let b = (((x - lo) / width) * bins as f64).floor() as usize;
        h[b.min(bins - 1)] += 1.0;
    }
    let n = v.len() as f64;
    h.iter_mut().for_each(|c| *c /= n);
    h
}

/// `sum_b min(p_a(b), p_b(b))` over `bins` equal-width bins spanning the
/// pooled range. A zero-width range gives 1.
pub fn histogram_overlap(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("overlap sample"));
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be >= 1".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("overlap sample"));
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(1.0);
    }
    let (pa, pb) = (pmf(a, lo, hi - lo, bins), pmf(b, lo, hi - lo, bins));
    let overlap: f64 = pa.iter().zip(&pb).map(|(x, y)| x.min(*y)).sum();
    Ok(overlap.clamp(0.0, 1.0))
}

pub fn loss_overlap(clean: &[f64], noisy: &[f64], bins: usize) -> Result<OverlapReport> {
    let overlap = histogram_overlap(clean, noisy, bins)?;
    let (ks_statistic, ks_p_value) = if clean.len() >= 2 && noisy.len() >= 2 {
        let r = ks_two_sample(clean, noisy)?;
        (r.statistic, r.p_value)
    } else {
        (f64::NAN, f64::NAN)
    };
    let (clean_mean, clean_std) = mean_std(clean);
    let (noisy_mean, noisy_std) = mean_std(noisy);
    Ok(OverlapReport {
        clean_mean,
        clean_std,
        noisy_mean,
        noisy_std,
        overlap,
        ks_statistic,
        ks_p_value,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_disjoint() {
        let a = [0.1, 0.4, 0.4, 0.9];
        let r = loss_overlap(&a, &a, 50).unwrap();
        assert!((r.overlap - 1.0).abs() < 1e-12);
        assert_eq!(r.ks_statistic, 0.0);
        assert_eq!(histogram_overlap(&[0.0, 0.1], &[5.0, 5.1], 50).unwrap(), 0.0);
    }

    #[test]
    fn zero_range_is_full_overlap() {
        assert_eq!(histogram_overlap(&[2.0, 2.0], &[2.0], 50).unwrap(), 1.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(loss_overlap(&[], &[1.0], 50).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 1..60),
            b in prop::collection::vec(-10.0f64..10.0, 1..60),
            pow in -4i32..5,
        ) {
            let o = histogram_overlap(&a, &b, 50).unwrap();
            prop_assert!((0.0..=1.0).contains(&o));
            prop_assert!((o - histogram_overlap(&b, &a, 50).unwrap()).abs() < 1e-12);
            let s = 2f64.powi(pow);
            let sa: Vec<f64> = a.iter().map(|x| x * s).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * s).collect();
            prop_assert!((o - histogram_overlap(&sa, &sb, 50).unwrap()).abs() < 1e-12);
        }
    }
}
