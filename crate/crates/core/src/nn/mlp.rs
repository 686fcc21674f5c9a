//! Two-layer MLP head: `linear -> batch-norm -> ReLU -> dropout -> linear`.
//!
//! Batch-norm normalises with the biased batch variance in train mode and
//! tracks running estimates with momentum 0.1 (unbiased variance, as the
//! common frameworks do). Dropout is inverted, so eval mode is the identity.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng as _;

use super::{check_input, uniform_init, AdamState, Classifier, Gradients, Matrix};
use crate::rng::Rng;
use crate::{Error, Result};

pub const HIDDEN_UNITS: usize = 256;
pub const DEFAULT_DROPOUT: f64 = 0.3;
const BN_MOMENTUM: f64 = 0.1;
const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    w1: Array2<f64>,
    b1: Array1<f64>,
    gamma: Array1<f64>,
    beta: Array1<f64>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    dropout_rate: f64,
    adam: AdamState,
}

#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Gradients for MlpGrads {
    fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.gamma.as_slice().expect("standard layout"),
            self.beta.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }
}

/// Activations kept from a train-mode forward for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    input: Matrix,
    normalized: Matrix,
    inv_std: Array1<f64>,
    pre_relu: Matrix,
    /// Inverted-dropout multipliers (0 or 1/(1-p)); `None` when p = 0.
    dropout: Option<Matrix>,
    hidden: Matrix,
}

impl MlpClassifier {
    /// `d -> 256 -> K` with dropout 0.3.
    pub fn new(input_dim: usize, num_classes: usize, rng: &mut Rng) -> Result<Self> {
        Self::with_hidden(input_dim, HIDDEN_UNITS, num_classes, DEFAULT_DROPOUT, rng)
    }

    pub fn with_hidden(
        input_dim: usize,
        hidden: usize,
        num_classes: usize,
        dropout_rate: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidConfig("layer dims must be > 0".into()));
        }
        if num_classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        let w1 = uniform_init(rng, input_dim, input_dim, hidden);
        let w2 = uniform_init(rng, hidden, hidden, num_classes);
        Self::from_parts(
            w1,
            Array1::zeros(hidden),
            Array1::ones(hidden),
            Array1::zeros(hidden),
            w2,
            Array1::zeros(num_classes),
            dropout_rate,
        )
    }

    /// Builds a head from explicit parameters; running stats start at (0, 1).
    pub fn from_parts(
        w1: Array2<f64>,
        b1: Array1<f64>,
        gamma: Array1<f64>,
        beta: Array1<f64>,
        w2: Array2<f64>,
        b2: Array1<f64>,
        dropout_rate: f64,
    ) -> Result<Self> {
        let hidden = w1.ncols();
        if b1.len() != hidden || gamma.len() != hidden || beta.len() != hidden || w2.nrows() != hidden
        {
            return Err(Error::Shape("hidden layer sizes disagree".into()));
        }
        if b2.len() != w2.ncols() {
            return Err(Error::Shape("output bias size disagrees with w2".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate must be in [0, 1), got {dropout_rate}"
            )));
        }
        let adam = AdamState::new(&[w1.len(), hidden, hidden, hidden, w2.len(), b2.len()]);
        Ok(Self {
            w1: w1.as_standard_layout().to_owned(),
            b1,
            gamma,
            beta,
            running_mean: Array1::zeros(hidden),
            running_var: Array1::ones(hidden),
            w2: w2.as_standard_layout().to_owned(),
            b2,
            dropout_rate,
            adam,
        })
    }

    pub fn hidden_units(&self) -> usize {
        self.w1.ncols()
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn running_mean(&self) -> &Array1<f64> {
        &self.running_mean
    }

    pub fn running_var(&self) -> &Array1<f64> {
        &self.running_var
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }
}

impl Classifier for MlpClassifier {
    type Cache = MlpCache;
    type Grads = MlpGrads;

    fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    fn forward_train(&mut self, batch: &Matrix, rng: &mut Rng) -> Result<(Matrix, MlpCache)> {
        check_input(batch, self.input_dim())?;
        let n = batch.nrows() as f64;
        let z = batch.dot(&self.w1) + &self.b1;

        let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
        let centered = &z - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let normalized = &centered * &inv_std;
        let pre_relu = &normalized * &self.gamma + &self.beta;

        let unbiased = if batch.nrows() > 1 {
            &var * (n / (n - 1.0))
        } else {
            var.clone()
        };
        self.running_mean = &self.running_mean * (1.0 - BN_MOMENTUM) + &mean * BN_MOMENTUM;
        self.running_var = &self.running_var * (1.0 - BN_MOMENTUM) + &unbiased * BN_MOMENTUM;

        let mut hidden = pre_relu.mapv(|v| v.max(0.0));
        let dropout = if self.dropout_rate > 0.0 {
            let keep_scale = 1.0 / (1.0 - self.dropout_rate);
            let p = self.dropout_rate;
            let mask = Array2::from_shape_simple_fn(hidden.dim(), || {
                if rng.random::<f64>() < p {
                    0.0
                } else {
                    keep_scale
                }
            });
            hidden *= &mask;
            Some(mask)
        } else {
            None
        };

        let logits = hidden.dot(&self.w2) + &self.b2;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok((
            logits,
            MlpCache {
                input: batch.clone(),
                normalized,
                inv_std,
                pre_relu,
                dropout,
                hidden,
            },
        ))
    }

    fn forward_eval(&self, batch: &Matrix) -> Result<Matrix> {
        check_input(batch, self.input_dim())?;
        let z = batch.dot(&self.w1) + &self.b1;
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let hidden = ((z - &self.running_mean) * &inv_std * &self.gamma + &self.beta)
            .mapv(|v| v.max(0.0));
        let logits = hidden.dot(&self.w2) + &self.b2;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(logits)
    }

    fn backward(&self, cache: &MlpCache, d_logits: &Matrix) -> MlpGrads {
        let n = d_logits.nrows() as f64;
        let w2 = cache.hidden.t().dot(d_logits);
        let b2 = d_logits.sum_axis(Axis(0));

        let mut d_pre = d_logits.dot(&self.w2.t());
        if let Some(mask) = &cache.dropout {
            d_pre *= mask;
        }
        Zip::from(&mut d_pre)
            .and(&cache.pre_relu)
            .for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0;
                }
            });

        let gamma = (&d_pre * &cache.normalized).sum_axis(Axis(0));
        let beta = d_pre.sum_axis(Axis(0));

        // dz = inv_std / n * (n * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
        let d_norm = &d_pre * &self.gamma;
        let sum_d = d_norm.sum_axis(Axis(0));
        let sum_dx = (&d_norm * &cache.normalized).sum_axis(Axis(0));
        let d_z = ((&d_norm * n - &sum_d - &cache.normalized * &sum_dx) * &cache.inv_std) / n;

        MlpGrads {
            w1: cache.input.t().dot(&d_z),
            b1: d_z.sum_axis(Axis(0)),
            gamma,
            beta,
            w2,
            b2,
        }
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.gamma.as_slice_mut().expect("standard layout"),
            self.beta.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    fn adam_step(&mut self, grads: &MlpGrads, lr: f64) -> Result<()> {
        let Self {
            w1,
            b1,
            gamma,
            beta,
            w2,
            b2,
            adam,
            ..
        } = self;
        adam.step(
            vec![
                w1.as_slice_mut().expect("standard layout"),
                b1.as_slice_mut().expect("standard layout"),
                gamma.as_slice_mut().expect("standard layout"),
                beta.as_slice_mut().expect("standard layout"),
                w2.as_slice_mut().expect("standard layout"),
                b2.as_slice_mut().expect("standard layout"),
            ],
            grads.slices(),
            lr,
        )
    }
}
