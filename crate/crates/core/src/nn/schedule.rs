use std::f64::consts::PI;

use super::TrainConfig;

/// Cosine annealing: `lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2`
/// with `T = cfg.max_epochs`. `epoch` is clamped to `[0, T]`.
pub fn cosine_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    let total = cfg.max_epochs.max(1) as f64;
    let t = (epoch as f64).min(total);
    cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + (PI * t / total).cos())
}
