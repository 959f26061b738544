//! Deep belief network: one Gaussian RBM on the raw features, a stack of
//! binary RBMs, and a softmax classifier on the last hidden layer.

mod cd;
mod gradient;
mod head;
mod io;
mod layers;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, Sample};
use crate::error::{Error, Result};
use crate::rng::seeded;

pub use cd::{cd_gradient, exact_loglik_gradient, layer_gradient, LayerGradient, NegativePhase};
pub use gradient::{total_gradient, Batch, GradientBundle};
pub(crate) use gradient::total_gradient_with_loss;
pub use head::{argmax, head_gradient, softmax, HeadGradient, SoftmaxHead};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use layers::{logistic, EnergyLayer, GrbmLayer, Moments, RbmLayer, MAX_ENUMERATION_UNITS};

/// Layer sizes of a network: input features, hidden layers (the first one
/// belongs to the GRBM), and output classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, classes: usize) -> Result<Self> {
        let arch = Architecture {
            input_dim,
            hidden,
            classes,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Builds from the flat `[d, h1, …, hk, U]` form.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 3 {
            return Err(Error::config(format!(
                "architecture needs input, at least one hidden layer and output; got {sizes:?}"
            )));
        }
        Self::new(sizes[0], sizes[1..sizes.len() - 1].to_vec(), sizes[sizes.len() - 1])
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.hidden.len() + 2);
        s.push(self.input_dim);
        s.extend_from_slice(&self.hidden);
        s.push(self.classes);
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config(format!(
                "invalid architecture {:?}: need d > 0 and non-empty positive hidden sizes",
                self.sizes()
            )));
        }
        if self.classes < 2 {
            return Err(Error::config("need at least two output classes"));
        }
        Ok(())
    }

    pub fn last_hidden(&self) -> usize {
        *self.hidden.last().expect("validated")
    }

    /// Number of parameters in the canonical flat encoding.
    pub fn param_count(&self) -> usize {
        let sizes = self.sizes();
        let layers: usize = sizes[..sizes.len() - 1]
            .windows(2)
            .map(|w| w[0] * w[1] + w[0] + w[1])
            .sum();
        layers + self.last_hidden() * self.classes + self.classes
    }
}

/// Hyper-parameters of per-node training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub cd_steps: usize,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            cd_steps: 1,
            batch_size: 64,
            iterations: 700,
            seed: 42,
            hidden: vec![16, 8],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.cd_steps == 0 {
            return Err(Error::config("cd steps must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize, classes: usize) -> Result<Architecture> {
        Architecture::new(input_dim, self.hidden.clone(), classes)
    }
}

/// Complete parameter set of one node's network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnModel {
    pub grbm: GrbmLayer,
    pub rbms: Vec<RbmLayer>,
    pub head: SoftmaxHead,
}

impl DbnModel {
    /// Weights drawn from `N(0, 0.01²)`, biases zero, `σ = 1`. Seed 0 is an
    /// ordinary seed.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seeded(seed, &[0x696e_6974]);
        let normal = Normal::new(0.0, 0.01).expect("valid std");
        let mut weights = |rows: usize, cols: usize| {
            Array2::from_shape_simple_fn((rows, cols), || normal.sample(&mut rng))
        };
        let sizes = arch.sizes();
        let mut grbm = GrbmLayer::zeros(sizes[0], sizes[1]);
        grbm.weights = weights(sizes[0], sizes[1]);
        let rbms = arch
            .hidden
            .windows(2)
            .map(|w| RbmLayer {
                weights: weights(w[0], w[1]),
                ..RbmLayer::zeros(w[0], w[1])
            })
            .collect();
        let head = SoftmaxHead {
            weights: weights(arch.last_hidden(), arch.classes),
            bias: Array1::zeros(arch.classes),
        };
        Ok(DbnModel { grbm, rbms, head })
    }

    pub fn architecture(&self) -> Architecture {
        let mut hidden = vec![self.grbm.hidden_dim()];
        hidden.extend(self.rbms.iter().map(|r| r.hidden_dim()));
        Architecture {
            input_dim: self.grbm.visible_dim(),
            hidden,
            classes: self.head.classes(),
        }
    }

    /// Checks that adjacent layers chain and every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        self.grbm.validate()?;
        let mut prev = self.grbm.hidden_dim();
        for (i, r) in self.rbms.iter().enumerate() {
            r.validate()?;
            if r.visible_dim() != prev {
                return Err(Error::shape(format!(
                    "RBM {i} expects {} inputs but the layer below has {prev} units",
                    r.visible_dim()
                )));
            }
            prev = r.hidden_dim();
        }
        if self.head.inputs() != prev || self.head.bias.len() != self.head.classes() {
            return Err(Error::shape("softmax head does not match last hidden layer".to_string()));
        }
        if self.flatten().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("model has non-finite parameters".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.grbm.visible_dim()
    }

    pub fn classes(&self) -> usize {
        self.head.classes()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::shape(format!(
                "input has {len} features, model expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Deterministic mean-field pass: every layer hands its hidden
    /// probabilities to the next one.
    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_input(x.len())?;
        let mut h = self.grbm.hidden_probs(x);
        for r in &self.rbms {
            h = r.hidden_probs(h.view());
        }
        Ok(h)
    }

    /// [`Self::forward`] applied to each row of `xs`.
    pub fn forward_batch(&self, xs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(xs.ncols())?;
        let mut h = self.grbm.hidden_probs_batch(xs);
        for r in &self.rbms {
            h = r.hidden_probs_batch(h.view());
        }
        Ok(h)
    }

    pub fn predict_proba(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let top = self.forward(x)?;
        self.head.probabilities(top.view())
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<ClassLabel> {
        let p = self.predict_proba(x)?;
        ClassLabel::from_index(argmax(p.view()), self.classes())
    }

    pub fn predict_samples(&self, samples: &[Sample]) -> Result<Vec<ClassLabel>> {
        samples
            .iter()
            .map(|s| self.predict(ArrayView1::from(&s.features)))
            .collect()
    }

    /// Canonical flat encoding: GRBM (W row-major, b1, b2), each RBM in stack
    /// order (W, b1, b2), then the head (W*, b*). `σ` is not included.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.architecture().param_count());
        let mut push = |a: &[f64]| out.extend_from_slice(a);
        push(&std_slice(&self.grbm.weights));
        push(self.grbm.visible_bias.as_slice().expect("contiguous"));
        push(self.grbm.hidden_bias.as_slice().expect("contiguous"));
        for r in &self.rbms {
            push(&std_slice(&r.weights));
            push(r.visible_bias.as_slice().expect("contiguous"));
            push(r.hidden_bias.as_slice().expect("contiguous"));
        }
        push(&std_slice(&self.head.weights));
        push(self.head.bias.as_slice().expect("contiguous"));
        out
    }

    /// Inverse of [`Self::flatten`]; `σ` is set to 1.
    pub fn unflatten(params: &[f64], arch: &Architecture) -> Result<Self> {
        let mut blocks = gradient::FlatBlocks::new(params, arch)?;
        let sizes = arch.sizes();
        let grbm = GrbmLayer {
            weights: blocks.matrix(sizes[0], sizes[1]),
            visible_bias: blocks.vector(sizes[0]),
            hidden_bias: blocks.vector(sizes[1]),
            sigma: Array1::ones(sizes[0]),
        };
        let rbms = arch
            .hidden
            .windows(2)
            .map(|w| RbmLayer {
                weights: blocks.matrix(w[0], w[1]),
                visible_bias: blocks.vector(w[0]),
                hidden_bias: blocks.vector(w[1]),
            })
            .collect();
        let head = SoftmaxHead {
            weights: blocks.matrix(arch.last_hidden(), arch.classes),
            bias: blocks.vector(arch.classes),
        };
        Ok(DbnModel { grbm, rbms, head })
    }

    /// Bitwise parameter equality, treating `0.0` and `-0.0` as different.
    pub fn bitwise_eq(&self, other: &DbnModel) -> bool {
        let a = self.flatten();
        let b = other.flatten();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits())
            && self.grbm.sigma == other.grbm.sigma
    }
}

pub(crate) fn std_slice(a: &Array2<f64>) -> std::borrow::Cow<'_, [f64]> {
    match a.as_slice() {
        Some(s) => std::borrow::Cow::Borrowed(s),
        None => std::borrow::Cow::Owned(a.iter().copied().collect()),
    }
}

/// `init_model` from the operation list.
pub fn init_model(arch: &Architecture, seed: u64) -> Result<DbnModel> {
    DbnModel::init(arch, seed)
}
