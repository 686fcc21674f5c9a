//! Dense classifier heads and the training loop shared by every method.

mod adam;
mod linear;
mod loss;
mod mlp;
mod schedule;
pub(crate) mod train;

use ndarray::Array2;

use crate::rng::Rng;
use crate::Result;

pub use adam::AdamState;
pub use linear::{LinearClassifier, LinearGrads};
pub use loss::{
    smoothed_targets, soft_cross_entropy, softmax_rows, weighted_ce_loss_and_grad, LossOutput,
};
pub use mlp::{MlpClassifier, MlpGrads, HIDDEN_UNITS};
pub use schedule::cosine_lr;
pub use train::{
    argmax_rows, fit, gather_rows, predict, run_epochs, shuffled_batches, EarlyStopping,
    EpochContext, EpochOutput, EpochRecord, FitReport, Prediction, Retention, StopDecision,
    TrainConfig, Trained,
};

/// Row-major `f64` matrix used for batches, activations and logits.
pub type Matrix = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Flat views of a parameter-shaped gradient, in the same order as
/// [`Classifier::param_slices_mut`].
pub trait Gradients {
    fn slices(&self) -> Vec<&[f64]>;
}

/// A trainable head mapping `B x d` feature batches to `B x K` logits.
pub trait Classifier: Clone + Send + Sync {
    type Cache;
    type Grads: Gradients;

    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;

    /// Train-mode forward. Batch-norm uses batch statistics and updates its
    /// running estimates; dropout masks are drawn from `rng`.
    fn forward_train(&mut self, batch: &Matrix, rng: &mut Rng) -> Result<(Matrix, Self::Cache)>;

    /// Eval-mode forward. Never mutates the model.
    fn forward_eval(&self, batch: &Matrix) -> Result<Matrix>;

    fn backward(&self, cache: &Self::Cache, d_logits: &Matrix) -> Self::Grads;

    /// Mutable flat views of every parameter tensor (excluding running stats).
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn adam_step(&mut self, grads: &Self::Grads, lr: f64) -> Result<()>;

    /// Dispatch on `mode`. Eval ignores `rng`.
    fn forward(&mut self, batch: &Matrix, mode: Mode, rng: &mut Rng) -> Result<Matrix> {
        match mode {
            Mode::Train => self.forward_train(batch, rng).map(|(logits, _)| logits),
            Mode::Eval => self.forward_eval(batch),
        }
    }
}

pub(crate) fn check_input(batch: &Matrix, input_dim: usize) -> Result<()> {
    if batch.ncols() != input_dim {
        return Err(crate::Error::Shape(format!(
            "batch has {} columns, model expects {}",
            batch.ncols(),
            input_dim
        )));
    }
    if batch.nrows() == 0 {
        return Err(crate::Error::Empty("batch"));
    }
    if batch.iter().any(|v| !v.is_finite()) {
        return Err(crate::Error::NonFinite("input batch"));
    }
    Ok(())
}

pub(crate) fn uniform_init(rng: &mut Rng, fan_in: usize, rows: usize, cols: usize) -> Matrix {
    use rand::Rng as _;
    let limit = (6.0 / fan_in as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}
