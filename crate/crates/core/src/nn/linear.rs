use ndarray::{Array1, Array2, Axis};

use super::{check_input, uniform_init, AdamState, Classifier, Gradients, Matrix};
use crate::rng::Rng;
use crate::{Error, Result};

/// Single affine layer `logits = x W + b` with `W: d x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    weights: Array2<f64>,
    bias: Array1<f64>,
    adam: AdamState,
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Gradients for LinearGrads {
    fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.weights.as_slice().expect("standard layout"),
            self.bias.as_slice().expect("standard layout"),
        ]
    }
}

impl LinearClassifier {
    /// Uniform `±sqrt(6 / d)` weights, zero bias.
    pub fn new(input_dim: usize, num_classes: usize, rng: &mut Rng) -> Result<Self> {
        validate_dims(input_dim, num_classes)?;
        let weights = uniform_init(rng, input_dim, input_dim, num_classes);
        Ok(Self::from_parts(weights, Array1::zeros(num_classes)))
    }

    pub fn zeros(input_dim: usize, num_classes: usize) -> Result<Self> {
        validate_dims(input_dim, num_classes)?;
        Ok(Self::from_parts(
            Array2::zeros((input_dim, num_classes)),
            Array1::zeros(num_classes),
        ))
    }

    pub fn from_parts(weights: Array2<f64>, bias: Array1<f64>) -> Self {
        assert_eq!(weights.ncols(), bias.len());
        let adam = AdamState::new(&[weights.len(), bias.len()]);
        Self {
            weights: weights.as_standard_layout().to_owned(),
            bias,
            adam,
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    fn affine(&self, batch: &Matrix) -> Matrix {
        batch.dot(&self.weights) + &self.bias
    }
}

fn validate_dims(input_dim: usize, num_classes: usize) -> Result<()> {
    if input_dim == 0 {
        return Err(Error::InvalidConfig("input dim must be > 0".into()));
    }
    if num_classes < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    Ok(())
}

impl Classifier for LinearClassifier {
    type Cache = Matrix;
    type Grads = LinearGrads;

    fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn num_classes(&self) -> usize {
        self.weights.ncols()
    }

    fn forward_train(&mut self, batch: &Matrix, _rng: &mut Rng) -> Result<(Matrix, Matrix)> {
        check_input(batch, self.input_dim())?;
        Ok((self.affine(batch), batch.clone()))
    }

    fn forward_eval(&self, batch: &Matrix) -> Result<Matrix> {
        check_input(batch, self.input_dim())?;
        Ok(self.affine(batch))
    }

    fn backward(&self, input: &Matrix, d_logits: &Matrix) -> LinearGrads {
        LinearGrads {
            weights: input.t().dot(d_logits),
            bias: d_logits.sum_axis(Axis(0)),
        }
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.weights.as_slice_mut().expect("standard layout"),
            self.bias.as_slice_mut().expect("standard layout"),
        ]
    }

    fn adam_step(&mut self, grads: &LinearGrads, lr: f64) -> Result<()> {
        let Self { weights, bias, adam } = self;
        adam.step(
            vec![
                weights.as_slice_mut().expect("standard layout"),
                bias.as_slice_mut().expect("standard layout"),
            ],
            grads.slices(),
            lr,
        )
    }
}
