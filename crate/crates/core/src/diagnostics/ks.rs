use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SERIES_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("ks sample"));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// `sup |F_a - F_b|` via a merge sweep over both sorted samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("ks sample"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Kolmogorov survival function `2 sum (-1)^(j-1) exp(-2 j^2 x^2)`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=SERIES_TERMS {
        let j = j as f64;
        let sign = if j as usize % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * j * j * x * x).exp();
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test with the asymptotic p-value at effective size
/// `nm / (n + m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Empty("ks test needs at least two values per sample"));
    }
    let statistic = ks_statistic(a, b)?;
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_q(ne.sqrt() * statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.1, 0.7, 0.7];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_samples() {
        let r = ks_two_sample(&[0.1, 0.5, 0.9], &[2.1, 2.5, 2.9, 2.2]).unwrap();
        assert_eq!(r.statistic, 1.0);
        let a: Vec<f64> = (0..20).map(|i| 0.01 + i as f64 * 0.049).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 2.0).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.statistic, 1.0);
        // sqrt(10) * 1 -> Q ~ 4.1e-9
        assert!(r.p_value < 1e-8);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) is the classic 5% critical value.
        assert!((kolmogorov_q(1.358_098_8) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_q(1.627_624) - 0.01).abs() < 1e-6);
    }

    #[test]
    fn ties_across_samples() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0, 2.0, 3.0]).unwrap(), 0.25);
    }
}
