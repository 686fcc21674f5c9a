//! Two-component 1-D Gaussian mixture fitted by EM, used to split per-sample
//! losses into a low-loss ("clean") and high-loss component.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const VAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSplit {
    /// Component 0 is the lower-mean (clean) component. Means and variances
    /// are on the min-max normalised scale.
    pub means: [f64; 2],
    pub vars: [f64; 2],
    pub weights: [f64; 2],
    /// Responsibility of the clean component for each input value.
    pub clean_posterior: Vec<f64>,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub converged: bool,
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean).powi(2) / var)
}

/// Responsibilities and total log-likelihood under the current parameters.
fn e_step(xs: &[f64], means: &[f64; 2], vars: &[f64; 2], weights: &[f64; 2]) -> (Vec<[f64; 2]>, f64) {
    let mut ll = 0.0;
    let resp = xs
        .iter()
        .map(|&x| {
            let a = weights[0].ln() + log_normal(x, means[0], vars[0]);
            let b = weights[1].ln() + log_normal(x, means[1], vars[1]);
            let m = a.max(b);
            let lse = m + ((a - m).exp() + (b - m).exp()).ln();
            ll += lse;
            [(a - lse).exp(), (b - lse).exp()]
        })
        .collect();
    (resp, ll)
}

pub fn gmm_fit_1d(values: &[f64], iters: usize, tol: f64) -> Result<GmmSplit> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gmm input"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 2 || !(max > min) {
        return Err(Error::Degenerate("gmm needs at least two distinct values".into()));
    }
    let xs: Vec<f64> = values.iter().map(|v| (v - min) / (max - min)).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var0 = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(VAR_FLOOR);

    let mut means = [0.25, 0.75];
    let mut vars = [var0, var0];
    let mut weights = [0.5, 0.5];
    let (mut resp, mut ll) = e_step(&xs, &means, &vars, &weights);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < iters {
        iterations += 1;
        for k in 0..2 {
            let nk: f64 = resp.iter().map(|r| r[k]).sum();
            if nk <= f64::EPSILON * n {
                return Err(Error::Degenerate("gmm component lost all mass".into()));
            }
            let mk = resp.iter().zip(&xs).map(|(r, x)| r[k] * x).sum::<f64>() / nk;
            let vk = resp.iter().zip(&xs).map(|(r, x)| r[k] * (x - mk).powi(2)).sum::<f64>() / nk;
            weights[k] = nk / n;
            means[k] = mk;
            vars[k] = vk.max(VAR_FLOOR);
        }
        let (r, new_ll) = e_step(&xs, &means, &vars, &weights);
        resp = r;
        let delta = (new_ll - ll).abs();
        ll = new_ll;
        if delta < tol {
            converged = true;
            break;
        }
    }

    let clean = if means[0] <= means[1] { 0 } else { 1 };
    let other = 1 - clean;
    Ok(GmmSplit {
        means: [means[clean], means[other]],
        vars: [vars[clean], vars[other]],
        weights: [weights[clean], weights[other]],
        clean_posterior: resp.iter().map(|r| r[clean]).collect(),
        iterations,
        log_likelihood: ll,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn point_masses_split_crisply() {
        let mut v = vec![0.0; 50];
        v.extend(vec![1.0; 30]);
        let g = gmm_fit_1d(&v, 100, 1e-10).unwrap();
        assert!(g.means[0].abs() < 1e-6);
        assert!((g.means[1] - 1.0).abs() < 1e-6);
        assert!((g.weights[0] - 50.0 / 80.0).abs() < 1e-6);
        for (i, &w) in g.clean_posterior.iter().enumerate() {
            let expected = if i < 50 { 1.0 } else { 0.0 };
            assert!((w - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_values_are_degenerate() {
        assert!(matches!(gmm_fit_1d(&[0.7; 10], 10, 1e-6), Err(Error::Degenerate(_))));
        assert!(gmm_fit_1d(&[1.0], 10, 1e-6).is_err());
    }

    #[test]
    fn recovers_generating_means() {
        let mut r = rng::stream(8, 0);
        let a = Normal::new(0.2, 0.05).unwrap();
        let b = Normal::new(0.8, 0.05).unwrap();
        let mut v: Vec<f64> = (0..500).map(|_| a.sample(&mut r)).collect();
        v.extend((0..500).map(|_| b.sample(&mut r)));
        let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let g = gmm_fit_1d(&v, 200, 1e-8).unwrap();
        let back = |m: f64| min + m * (max - min);
        assert!((back(g.means[0]) - 0.2).abs() < 0.05);
        assert!((back(g.means[1]) - 0.8).abs() < 0.05);
        assert!((g.weights[0] + g.weights[1] - 1.0).abs() < 1e-12);
        assert!(g.vars.iter().all(|&v| v > 0.0));
        assert!(g.converged);
    }
}
