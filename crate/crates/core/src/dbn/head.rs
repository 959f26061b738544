use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};

/// Softmax output layer on top of the last hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    /// `H × U`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Numerically stable softmax.
pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e = logits.mapv(|z| (z - max).exp());
    let sum = e.sum();
    e /= sum;
    e
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl SoftmaxHead {
    pub fn zeros(inputs: usize, classes: usize) -> Self {
        SoftmaxHead {
            weights: Array2::zeros((inputs, classes)),
            bias: Array1::zeros(classes),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn logits(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.weights.t().dot(&x) + &self.bias
    }

    pub fn probabilities(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::shape(format!(
                "head input has length {}, expected {}",
                x.len(),
                self.inputs()
            )));
        }
        Ok(softmax(self.logits(x).view()))
    }

    fn check_batch(&self, xs: ArrayView2<f64>, labels: &[ClassLabel]) -> Result<()> {
        if xs.nrows() != labels.len() {
            return Err(Error::shape(format!(
                "{} inputs but {} labels",
                xs.nrows(),
                labels.len()
            )));
        }
        if xs.ncols() != self.inputs() {
            return Err(Error::shape(format!(
                "head inputs have {} columns, expected {}",
                xs.ncols(),
                self.inputs()
            )));
        }
        if let Some(l) = labels.iter().find(|l| l.index() >= self.classes()) {
            return Err(Error::Data(format!(
                "label {} outside {} classes",
                l.value(),
                self.classes()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        Ok(())
    }

    /// Mean log-probability of the true classes.
    pub fn log_likelihood(&self, xs: ArrayView2<f64>, labels: &[ClassLabel]) -> Result<f64> {
        self.check_batch(xs, labels)?;
        let mut total = 0.0;
        for (x, label) in xs.axis_iter(Axis(0)).zip(labels) {
            let z = self.logits(x);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += z[label.index()] - lse;
        }
        Ok(total / labels.len() as f64)
    }

    /// Gradient of [`Self::log_likelihood`]: per sample `x (onehot − p)ᵀ`
    /// for the weights and `onehot − p` for the bias, averaged.
    pub fn gradient(&self, xs: ArrayView2<f64>, labels: &[ClassLabel]) -> Result<HeadGradient> {
        self.check_batch(xs, labels)?;
        let w = 1.0 / labels.len() as f64;
        let mut grad = HeadGradient {
            weights: Array2::zeros(self.weights.raw_dim()),
            bias: Array1::zeros(self.classes()),
        };
        for (x, label) in xs.axis_iter(Axis(0)).zip(labels) {
            let mut delta = -softmax(self.logits(x).view());
            delta[label.index()] += 1.0;
            for (mut row, &xi) in grad.weights.axis_iter_mut(Axis(0)).zip(x.iter()) {
                row.scaled_add(w * xi, &delta);
            }
            grad.bias.scaled_add(w, &delta);
        }
        Ok(grad)
    }
}

/// Free-function form of [`SoftmaxHead::gradient`].
pub fn head_gradient(head: &SoftmaxHead, xs: ArrayView2<f64>, labels: &[ClassLabel]) -> Result<HeadGradient> {
    head.gradient(xs, labels)
}
