//! Oracles and fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use noisecascade::dataset::{generate_synthetic, FeatureDataset, SyntheticSpec};
use noisecascade::methods::{train_method, MethodSpec};
use noisecascade::nn::{
    weighted_ce_loss_and_grad, Classifier, EpochRecord, Gradients, LinearClassifier, Matrix, MlpClassifier, TrainConfig,
};
use noisecascade::noise::{inject, NoiseSpec};
use noisecascade::rng::{self, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;

// ---------------------------------------------------------------- gradients

fn loss_of<C: Classifier>(model: &C, x: &Matrix, y: &[usize], w: &[f64], eps: f64, seed: u64) -> f64 {
    let mut m = model.clone();
    let (logits, _) = m.forward_train(x, &mut rng::stream(seed, 99)).unwrap();
    weighted_ce_loss_and_grad(&logits, y, w, eps).unwrap().loss
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest per-tensor relative error `|a - n| / (|a| + |n|)` between the
/// analytic gradient and central differences. Dropout masks are replayed
/// from the same stream on every evaluation. Tensors whose gradient is zero
/// on both sides are skipped.
pub fn fd_gradient_error<C: Classifier>(model: &C, x: &Matrix, y: &[usize], w: &[f64], eps: f64, seed: u64) -> f64 {
    let h = 1e-6;
    let mut m = model.clone();
    let (logits, cache) = m.forward_train(x, &mut rng::stream(seed, 99)).unwrap();
    let out = weighted_ce_loss_and_grad(&logits, y, w, eps).unwrap();
    let grads = model.backward(&cache, &out.grad);
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();

    let mut worst: f64 = 0.0;
    for (t, a) in analytic.iter().enumerate() {
        let mut num = vec![0.0; a.len()];
        for (e, slot) in num.iter_mut().enumerate() {
            let mut plus = model.clone();
            plus.param_slices_mut()[t][e] += h;
            let mut minus = model.clone();
            minus.param_slices_mut()[t][e] -= h;
            *slot = (loss_of(&plus, x, y, w, eps, seed) - loss_of(&minus, x, y, w, eps, seed)) / (2.0 * h);
        }
        let diff = a.iter().zip(&num).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let (na, nn) = (norm(a), norm(&num));
        // both sides zero up to rounding, e.g. the pre-batch-norm bias
        if na < 1e-7 && nn < 1e-7 {
            continue;
        }
        worst = worst.max(diff / (na + nn));
    }
    worst
}

fn normal_matrix(r: &mut Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    let n = rand_distr::Normal::new(0.0, scale).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || r.sample(n))
}

fn normal_vec(r: &mut Rng, len: usize, mean: f64, scale: f64) -> Array1<f64> {
    let n = rand_distr::Normal::new(mean, scale).unwrap();
    Array1::from_shape_simple_fn(len, || r.sample(n))
}

pub struct GradInstance {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub w: Vec<f64>,
    pub smoothing: f64,
}

pub fn grad_instance(seed: u64, d: usize, k: usize, b: usize) -> GradInstance {
    let mut r = rng::stream(seed, 7);
    let x = normal_matrix(&mut r, b, d, 1.0);
    let y = (0..b).map(|_| r.random_range(0..k)).collect();
    let w = (0..k).map(|_| r.random_range(0.2..3.0)).collect();
    let smoothing = if seed % 2 == 0 { 0.0 } else { 0.1 };
    GradInstance { x, y, w, smoothing }
}

/// Worst relative error over `instances` random linear and MLP heads.
pub fn gradient_errors(instances: u64) -> (f64, f64) {
    let (mut lin, mut mlp) = (0.0f64, 0.0f64);
    for s in 0..instances {
        let mut r = rng::stream(s, 8);
        let (d, k, b) = (r.random_range(2..7), r.random_range(2..5), r.random_range(3..9));
        let hidden = r.random_range(2..8);
        let inst = grad_instance(s, d, k, b);

        let l = LinearClassifier::from_parts(normal_matrix(&mut r, d, k, 0.5), normal_vec(&mut r, k, 0.0, 0.5));
        lin = lin.max(fd_gradient_error(&l, &inst.x, &inst.y, &inst.w, inst.smoothing, s));

        let dropout = if s % 3 == 0 { 0.0 } else { 0.3 };
        let m = MlpClassifier::from_parts(
            normal_matrix(&mut r, d, hidden, 0.7),
            normal_vec(&mut r, hidden, 0.0, 0.3),
            normal_vec(&mut r, hidden, 1.0, 0.3),
            normal_vec(&mut r, hidden, 0.0, 0.3),
            normal_matrix(&mut r, hidden, k, 0.7),
            normal_vec(&mut r, k, 0.0, 0.3),
            dropout,
        )
        .unwrap();
        mlp = mlp.max(fd_gradient_error(&m, &inst.x, &inst.y, &inst.w, inst.smoothing, s));
    }
    (lin, mlp)
}

// -------------------------------------------------------------- statistics

/// `Gamma(m / 2)` for integer `m >= 1`.
fn gamma_half(m: u32) -> f64 {
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while 2.0 * x < m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

pub fn t_density(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let c = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    c * (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0)
}

/// Two-sided tail `1 - 2 * int_0^|t| f(s) ds` by composite Simpson.
pub fn t_two_sided_by_quadrature(t: f64, df: u32) -> f64 {
    let a = t.abs();
    let n = 20_000;
    let h = a / n as f64;
    let mut s = t_density(0.0, df) + t_density(a, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(i as f64 * h, df);
    }
    1.0 - 2.0 * s * h / 3.0
}

/// `max_t |F_a(t) - F_b(t)|` over every observed value, O(nm).
pub fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    a.iter()
        .chain(b)
        .map(|&t| {
            let ca = a.iter().filter(|&&v| v <= t).count();
            let cb = b.iter().filter(|&&v| v <= t).count();
            (ca as f64 / n - cb as f64 / m).abs()
        })
        .fold(0.0, f64::max)
}

/// Preds and truths realising `confusion[true][pred]`, shuffled.
pub fn expand_confusion(confusion: &[Vec<u64>], r: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut pairs = Vec::new();
    for (t, row) in confusion.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            pairs.extend(std::iter::repeat_n((p, t), c as usize));
        }
    }
    pairs.shuffle(r);
    pairs.into_iter().unzip()
}

pub fn balacc_oracle(confusion: &[Vec<u64>]) -> f64 {
    let recalls: Vec<f64> = confusion
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().sum::<u64>() > 0)
        .map(|(c, row)| row[c] as f64 / row.iter().sum::<u64>() as f64)
        .collect();
    recalls.iter().sum::<f64>() / recalls.len() as f64
}

// ---------------------------------------------------------------- fixtures

pub fn blobs(k: usize, d: usize, per_class: usize, scale: f64, seed: u64) -> FeatureDataset {
    generate_synthetic(&SyntheticSpec {
        class_counts: vec![per_class; k],
        centroid_scale: scale,
        ..spec_like(k, d, seed)
    })
    .unwrap()
}

/// Train / val / test for reduction checks: symmetric noise on train and val.
pub fn reduction_data(seed: u64) -> (FeatureDataset, FeatureDataset, FeatureDataset) {
    let ds = blobs(3, 6, 120, 2.5, seed);
    let split = noisecascade::dataset::split_indices(&ds, &Default::default()).unwrap();
    let (train, _) = inject(&ds.subset(&split.train), &NoiseSpec::symmetric(0.3, seed)).unwrap();
    let (val, _) = inject(&ds.subset(&split.val), &NoiseSpec::symmetric(0.3, seed + 1)).unwrap();
    (train, val, ds.subset(&split.test))
}

pub fn reduction_config(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 12,
        batch_size: 32,
        patience: 4,
        seed,
        ..TrainConfig::default()
    }
}

/// Whether `method` reproduces `baseline` bit for bit: same test logits and
/// the same per-epoch history.
pub fn reproduces(method: &MethodSpec, baseline: &MethodSpec, seed: u64) -> bool {
    let (train, val, test) = reduction_data(seed);
    let cfg = reduction_config(seed);
    let a = train_method(method, &train, &val, &cfg, 0.0).unwrap();
    let b = train_method(baseline, &train, &val, &cfg, 0.0).unwrap();
    let x = test.features_f64();
    let (la, lb) = (a.model.forward_eval(&x).unwrap(), b.model.forward_eval(&x).unwrap());
    let same_bits = la.iter().zip(lb.iter()).all(|(p, q)| p.to_bits() == q.to_bits());
    // the cascade also logs retention rates; compare everything else
    let strip = |h: &[EpochRecord]| -> Vec<EpochRecord> {
        h.iter().map(|e| EpochRecord { retention: None, ..e.clone() }).collect()
    };
    same_bits && strip(&a.report.history) == strip(&b.report.history) && a.report.best_epoch == b.report.best_epoch
}

/// The four reductions: (name, method with noise handling off, baseline).
pub fn reduction_cases() -> Vec<(&'static str, MethodSpec, MethodSpec)> {
    vec![
        (
            "co-teaching eta=0 vs ce",
            MethodSpec::CoTeaching { forget_rate: Some(0.0), ramp_epochs: 10 },
            MethodSpec::Ce,
        ),
        ("elr lambda=0 vs ce", MethodSpec::Elr { beta: 0.7, lambda: 0.0 }, MethodSpec::Ce),
        ("label-smoothing eps=0 vs ce", MethodSpec::LabelSmoothing { epsilon: 0.0 }, MethodSpec::Ce),
        (
            "cascade lpm_only vs linear-probe",
            MethodSpec::Cascade { stages: noisecascade::methods::CascadeStages::LpmOnly },
            MethodSpec::LinearProbe,
        ),
    ]
}

// ------------------------------------------------------------ oracle loops

/// KS statistic against brute force on `cases` random sample pairs
/// (n, m <= 200); half the cases draw from a coarse grid to force ties.
pub fn check_ks_exact(cases: u64) -> Result<(), String> {
    let mut r = rng::stream(11, 0);
    for case in 0..cases {
        let (n, m) = (r.random_range(1..=200), r.random_range(1..=200));
        let draw = |r: &mut Rng| {
            if case % 2 == 0 {
                r.random_range(0..15) as f64
            } else {
                r.random_range(-3.0..3.0)
            }
        };
        let a: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        let b: Vec<f64> = (0..m).map(|_| draw(&mut r)).collect();
        let (got, want) = (noisecascade::diagnostics::ks_statistic(&a, &b).unwrap(), ks_brute(&a, &b));
        if got != want {
            return Err(format!("case {case}: D {got} vs brute {want}"));
        }
    }
    Ok(())
}

/// Largest `|p - quadrature|` over df 2..=10 and a grid of t values.
pub fn max_t_quadrature_gap() -> f64 {
    let mut worst: f64 = 0.0;
    for df in 2..=10u32 {
        for i in 0..=40 {
            let t = -2.0 + 0.25 * i as f64;
            let p = noisecascade::stats::student_t_two_sided(t, df as f64);
            worst = worst.max((p - t_two_sided_by_quadrature(t, df)).abs());
        }
    }
    worst
}

pub fn check_balacc_exact(cases: u64) -> Result<(), String> {
    let mut r = rng::stream(13, 0);
    for case in 0..cases {
        let k = r.random_range(2..9);
        let mut confusion: Vec<Vec<u64>> = (0..k)
            .map(|_| (0..k).map(|_| r.random_range(0..30)).collect())
            .collect();
        confusion[0][0] += 1;
        let (preds, truths) = expand_confusion(&confusion, &mut r);
        let rep = noisecascade::stats::evaluate(&preds, &truths, k).unwrap();
        if rep.confusion != confusion || rep.balanced_accuracy != balacc_oracle(&confusion) {
            return Err(format!("case {case}: {} vs {}", rep.balanced_accuracy, balacc_oracle(&confusion)));
        }
    }
    Ok(())
}

fn same_feature_bytes(a: &FeatureDataset, b: &FeatureDataset) -> bool {
    a.features().iter().zip(b.features().iter()).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Flip count `round(eta * N)`, no self-flips, record consistency and
/// untouched features over `trials` random symmetric injections.
pub fn check_symmetric_noise(trials: u64) -> Result<(), String> {
    let mut r = rng::stream(21, 0);
    for trial in 0..trials {
        let k = r.random_range(2..9);
        let per = r.random_range(3..60);
        let eta = r.random_range(0.0..0.95);
        let ds = blobs(k, 3, per, 3.0, trial);
        let (noisy, rec) = inject(&ds, &NoiseSpec::symmetric(eta, trial)).unwrap();
        let expected = (eta * ds.len() as f64).round_ties_even() as usize;
        if rec.num_flipped() != expected {
            return Err(format!("trial {trial}: {} flips, expected {expected}", rec.num_flipped()));
        }
        if rec.original != ds.labels() || rec.observed != noisy.labels() {
            return Err(format!("trial {trial}: record does not match datasets"));
        }
        if !same_feature_bytes(&ds, &noisy) {
            return Err(format!("trial {trial}: features changed"));
        }
    }
    Ok(())
}

/// Per-class flip counts `round(eta * N_c)` for mapped classes, zero for
/// the rest, and every flip landing on the map target.
pub fn check_asymmetric_noise(trials: u64) -> Result<(), String> {
    let mut r = rng::stream(22, 0);
    for trial in 0..trials {
        let k = r.random_range(2..9);
        let counts: Vec<usize> = (0..k).map(|_| r.random_range(1..50)).collect();
        let ds = generate_synthetic(&SyntheticSpec {
            class_counts: counts.clone(),
            ..spec_like(k, 3, trial)
        })
        .unwrap();

        let mut sources: Vec<usize> = (0..k).collect();
        sources.shuffle(&mut r);
        let mapped = r.random_range(1..=k);
        let map: std::collections::BTreeMap<usize, usize> = sources[..mapped]
            .iter()
            .map(|&c| {
                let t = r.random_range(0..k - 1);
                (c, if t >= c { t + 1 } else { t })
            })
            .collect();
        let eta = r.random_range(0.0..0.95);
        let (noisy, rec) = inject(&ds, &NoiseSpec::asymmetric(eta, map.clone(), trial)).unwrap();

        let mut flips = vec![0usize; k];
        for i in 0..rec.len() {
            let (o, v) = (usize::from(rec.original[i]), usize::from(rec.observed[i]));
            if o != v {
                if map.get(&o) != Some(&v) {
                    return Err(format!("trial {trial}: flip {o} -> {v} not in map"));
                }
                flips[o] += 1;
            }
        }
        for c in 0..k {
            let expected = if map.contains_key(&c) {
                (eta * counts[c] as f64).round_ties_even() as usize
            } else {
                0
            };
            if flips[c] != expected {
                return Err(format!("trial {trial} class {c}: {} flips, expected {expected}", flips[c]));
            }
        }
        if !same_feature_bytes(&ds, &noisy) {
            return Err(format!("trial {trial}: features changed"));
        }
    }
    Ok(())
}

fn spec_like(k: usize, d: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        num_classes: k,
        dim: d,
        class_counts: vec![1; k],
        centroid_scale: 3.0,
        sigma: 1.0,
        confusion_pairs: Vec::new(),
        proximity_factor: 1.0,
        modes_per_class: 1,
        mode_spread: 0.0,
        class_names: None,
        seed,
    }
}
