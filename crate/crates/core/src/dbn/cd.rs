use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{sample_bernoulli, EnergyLayer, Moments, RbmLayer};
use crate::error::{Error, Result};

/// Ascent direction for one energy-based layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
}

impl LayerGradient {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        LayerGradient {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    fn from_moments(data: Moments, model: Moments) -> Self {
        LayerGradient {
            weights: data.weights - model.weights,
            visible_bias: data.visible - model.visible,
            hidden_bias: data.hidden - model.hidden,
        }
    }
}

/// How `⟨·⟩_model` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativePhase {
    /// `steps` alternating Gibbs updates started at the data (CD-k).
    Gibbs { steps: usize },
    /// Exact expectation by enumerating every joint state.
    Exact,
}

fn data_moments<L: EnergyLayer>(layer: &L, batch: ArrayView2<f64>) -> (Moments, Vec<Array1<f64>>) {
    let w = 1.0 / batch.nrows() as f64;
    let mut acc = layer.zero_moments();
    let mut hidden = Vec::with_capacity(batch.nrows());
    for v in batch.axis_iter(Axis(0)) {
        let h = layer.hidden_probs(v);
        layer.accumulate(&mut acc, v, h.view(), w);
        hidden.push(h);
    }
    (acc, hidden)
}

/// Log-likelihood gradient estimate for one layer, averaged over `batch`.
///
/// The data term pairs each visible row with its hidden probabilities. The
/// model term depends on `phase`; for CD-k the chain starts from a sample of
/// the data-driven hidden state and the final hidden state enters through its
/// probabilities.
pub fn layer_gradient<L: EnergyLayer, R: Rng + ?Sized>(
    layer: &L,
    batch: ArrayView2<f64>,
    phase: NegativePhase,
    rng: &mut R,
) -> Result<LayerGradient> {
    if batch.nrows() == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    if batch.ncols() != layer.visible_dim() {
        return Err(Error::shape(format!(
            "batch has {} columns, layer expects {}",
            batch.ncols(),
            layer.visible_dim()
        )));
    }
    let (data, hidden) = data_moments(layer, batch);
    let model = match phase {
        NegativePhase::Exact => layer.exact_model_moments()?,
        NegativePhase::Gibbs { steps } => {
            if steps == 0 {
                return Err(Error::config("CD needs at least one Gibbs step"));
            }
            let w = 1.0 / batch.nrows() as f64;
            let mut acc = layer.zero_moments();
            for h_data in &hidden {
                let mut h = sample_bernoulli(h_data, rng);
                let mut v = layer.sample_visible(h.view(), rng);
                let mut h_probs = layer.hidden_probs(v.view());
                for _ in 1..steps {
                    h = sample_bernoulli(&h_probs, rng);
                    v = layer.sample_visible(h.view(), rng);
                    h_probs = layer.hidden_probs(v.view());
                }
                layer.accumulate(&mut acc, v.view(), h_probs.view(), w);
            }
            acc
        }
    };
    Ok(LayerGradient::from_moments(data, model))
}

/// CD-k gradient of one layer.
pub fn cd_gradient<L: EnergyLayer, R: Rng + ?Sized>(
    layer: &L,
    batch: ArrayView2<f64>,
    steps: usize,
    rng: &mut R,
) -> Result<LayerGradient> {
    layer_gradient(layer, batch, NegativePhase::Gibbs { steps }, rng)
}

/// Exact gradient of the mean log-likelihood of `batch` under a small binary
/// RBM. Intended as a reference for testing; cost grows as `2^(P+G)`.
pub fn exact_loglik_gradient(layer: &RbmLayer, batch: ArrayView2<f64>) -> Result<LayerGradient> {
    layer_gradient(layer, batch, NegativePhase::Exact, &mut crate::rng::seeded(0, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::layers::GrbmLayer;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, concatenate};

    #[test]
    fn closed_form_one_by_one() {
        let layer = RbmLayer::zeros(1, 1);
        let batch = array![[1.0], [1.0], [1.0]];
        let g = exact_loglik_gradient(&layer, batch.view()).unwrap();
        assert_abs_diff_eq!(g.weights[[0, 0]], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.visible_bias[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.hidden_bias[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn duplicated_batch_same_exact_gradient() {
        let mut layer = RbmLayer::zeros(3, 2);
        layer.weights = array![[0.2, -0.1], [0.05, 0.3], [-0.4, 0.1]];
        let batch = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let doubled = concatenate![Axis(0), batch, batch];
        let a = exact_loglik_gradient(&layer, batch.view()).unwrap();
        let b = exact_loglik_gradient(&layer, doubled.view()).unwrap();
        for (x, y) in a.weights.iter().zip(b.weights.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn cd_is_deterministic_per_seed() {
        let mut layer = GrbmLayer::zeros(3, 4);
        layer.weights.fill(0.1);
        let batch = array![[0.5, -1.0, 2.0], [1.0, 0.0, -0.3]];
        let a = cd_gradient(&layer, batch.view(), 2, &mut seeded(5, &[])).unwrap();
        let b = cd_gradient(&layer, batch.view(), 2, &mut seeded(5, &[])).unwrap();
        assert_eq!(a, b);
        let c = cd_gradient(&layer, batch.view(), 2, &mut seeded(6, &[])).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cd_converges_to_exact_on_average() {
        // Zero parameters: every Gibbs step samples the uniform model
        // distribution, so CD-1 is unbiased.
        let layer = RbmLayer::zeros(1, 1);
        let batch = Array2::from_elem((20000, 1), 1.0);
        let g = cd_gradient(&layer, batch.view(), 1, &mut seeded(1, &[])).unwrap();
        assert_abs_diff_eq!(g.weights[[0, 0]], 0.25, epsilon = 0.01);
    }

    #[test]
    fn errors() {
        let layer = RbmLayer::zeros(2, 2);
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(cd_gradient(&layer, empty.view(), 1, &mut seeded(0, &[])).is_err());
        let wrong = Array2::<f64>::zeros((1, 3));
        assert!(cd_gradient(&layer, wrong.view(), 1, &mut seeded(0, &[])).is_err());
        let ok = Array2::<f64>::zeros((1, 2));
        assert!(cd_gradient(&layer, ok.view(), 0, &mut seeded(0, &[])).is_err());
        let wide = Array2::<f64>::zeros((1, 9));
        assert!(exact_loglik_gradient(&RbmLayer::zeros(9, 8), wide.view()).is_err());
    }
}
