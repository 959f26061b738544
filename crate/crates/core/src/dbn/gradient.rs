use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cd::{cd_gradient, LayerGradient};
use super::head::HeadGradient;
use super::layers::EnergyLayer;
use super::{std_slice, Architecture, DbnModel, TrainConfig};
use crate::dataset::{ClassLabel, Sample};
use crate::error::{Error, Result};

/// A mini-batch in matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `n × d`
    pub features: Array2<f64>,
    pub labels: Vec<ClassLabel>,
}

impl Batch {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Result<Self> {
        let samples: Vec<&Sample> = samples.into_iter().collect();
        let first = samples
            .first()
            .ok_or_else(|| Error::Data("empty batch".into()))?;
        let d = first.features.len();
        let mut features = Array2::zeros((samples.len(), d));
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != d {
                return Err(Error::shape("ragged batch"));
            }
            features
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&s.features));
        }
        Ok(Batch {
            features,
            labels: samples.iter().map(|s| s.label).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Gradient of the whole network, block for block congruent with [`DbnModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBundle {
    pub grbm: LayerGradient,
    pub rbms: Vec<LayerGradient>,
    pub head: HeadGradient,
    pub batch_size: usize,
}

/// Cursor over a flat parameter sequence laid out for an architecture.
pub(crate) struct FlatBlocks<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> FlatBlocks<'a> {
    pub(crate) fn new(data: &'a [f64], arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        if data.len() != arch.param_count() {
            return Err(Error::shape(format!(
                "flat sequence has {} values, architecture {:?} needs {}",
                data.len(),
                arch.sizes(),
                arch.param_count()
            )));
        }
        Ok(FlatBlocks { data, pos: 0 })
    }

    fn take(&mut self, n: usize) -> &'a [f64] {
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    pub(crate) fn matrix(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_vec((rows, cols), self.take(rows * cols).to_vec()).expect("sized")
    }

    pub(crate) fn vector(&mut self, n: usize) -> Array1<f64> {
        Array1::from(self.take(n).to_vec())
    }
}

impl GradientBundle {
    pub fn zeros(arch: &Architecture) -> Self {
        let sizes = arch.sizes();
        GradientBundle {
            grbm: LayerGradient::zeros(sizes[0], sizes[1]),
            rbms: arch
                .hidden
                .windows(2)
                .map(|w| LayerGradient::zeros(w[0], w[1]))
                .collect(),
            head: HeadGradient {
                weights: Array2::zeros((arch.last_hidden(), arch.classes)),
                bias: Array1::zeros(arch.classes),
            },
            batch_size: 0,
        }
    }

    pub fn architecture(&self) -> Architecture {
        let mut hidden = vec![self.grbm.hidden_bias.len()];
        hidden.extend(self.rbms.iter().map(|r| r.hidden_bias.len()));
        Architecture {
            input_dim: self.grbm.visible_bias.len(),
            hidden,
            classes: self.head.bias.len(),
        }
    }

    /// Same canonical order as [`DbnModel::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut layer = |g: &LayerGradient| {
            out.extend_from_slice(&std_slice(&g.weights));
            out.extend(g.visible_bias.iter());
            out.extend(g.hidden_bias.iter());
        };
        layer(&self.grbm);
        self.rbms.iter().for_each(&mut layer);
        out.extend_from_slice(&std_slice(&self.head.weights));
        out.extend(self.head.bias.iter());
        out
    }

    pub fn unflatten(params: &[f64], arch: &Architecture, batch_size: usize) -> Result<Self> {
        let mut b = FlatBlocks::new(params, arch)?;
        let sizes = arch.sizes();
        let mut layer = |p: usize, g: usize| LayerGradient {
            weights: b.matrix(p, g),
            visible_bias: b.vector(p),
            hidden_bias: b.vector(g),
        };
        let grbm = layer(sizes[0], sizes[1]);
        let rbms = arch.hidden.windows(2).map(|w| layer(w[0], w[1])).collect();
        let head = HeadGradient {
            weights: b.matrix(arch.last_hidden(), arch.classes),
            bias: b.vector(arch.classes),
        };
        Ok(GradientBundle {
            grbm,
            rbms,
            head,
            batch_size,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

impl DbnModel {
    /// Gradient ascent step `Θ ← Θ + ε ∇`. `σ` is left untouched.
    pub fn apply_update(&mut self, gradient: &GradientBundle, learning_rate: f64) -> Result<()> {
        if gradient.architecture() != self.architecture() {
            return Err(Error::shape(format!(
                "gradient for {:?} applied to model {:?}",
                gradient.architecture().sizes(),
                self.architecture().sizes()
            )));
        }
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        let eps = learning_rate;
        self.grbm.weights.scaled_add(eps, &gradient.grbm.weights);
        self.grbm.visible_bias.scaled_add(eps, &gradient.grbm.visible_bias);
        self.grbm.hidden_bias.scaled_add(eps, &gradient.grbm.hidden_bias);
        for (r, g) in self.rbms.iter_mut().zip(&gradient.rbms) {
            r.weights.scaled_add(eps, &g.weights);
            r.visible_bias.scaled_add(eps, &g.visible_bias);
            r.hidden_bias.scaled_add(eps, &g.hidden_bias);
        }
        self.head.weights.scaled_add(eps, &gradient.head.weights);
        self.head.bias.scaled_add(eps, &gradient.head.bias);
        Ok(())
    }
}

/// Total gradient plus the batch cross-entropy of the head before the update.
pub(crate) fn total_gradient_with_loss<R: Rng + ?Sized>(
    model: &DbnModel,
    batch: &Batch,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<(GradientBundle, f64)> {
    if batch.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let x: ArrayView2<f64> = batch.features.view();
    if x.ncols() != model.input_dim() {
        return Err(Error::shape(format!(
            "batch has {} features, model expects {}",
            x.ncols(),
            model.input_dim()
        )));
    }
    let grbm = cd_gradient(&model.grbm, x, config.cd_steps, rng)?;
    let mut h = model.grbm.hidden_probs_batch(x);
    let mut rbms = Vec::with_capacity(model.rbms.len());
    for r in &model.rbms {
        rbms.push(cd_gradient(r, h.view(), config.cd_steps, rng)?);
        h = r.hidden_probs_batch(h.view());
    }
    let head = model.head.gradient(h.view(), &batch.labels)?;
    let loss = -model.head.log_likelihood(h.view(), &batch.labels)?;
    let bundle = GradientBundle {
        grbm,
        rbms,
        head,
        batch_size: batch.len(),
    };
    if !bundle.is_finite() || !loss.is_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok((bundle, loss))
}

/// Sum of the per-layer gradients: CD for the GRBM on the raw batch, CD for
/// each RBM on the mean-field output of the layer below, and the softmax
/// gradient on the top representation. The blocks are independent.
pub fn total_gradient<R: Rng + ?Sized>(
    model: &DbnModel,
    batch: &Batch,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<GradientBundle> {
    total_gradient_with_loss(model, batch, config, rng).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::cd::cd_gradient;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn arch(sizes: &[usize]) -> Architecture {
        Architecture::from_sizes(sizes).unwrap()
    }

    fn batch(n: usize, d: usize, seed: u64) -> Batch {
        let mut rng = seeded(seed, &[]);
        let samples: Vec<Sample> = (0..n)
            .map(|i| Sample {
                features: (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect(),
                label: ClassLabel::from_index(i % 4, 4).unwrap(),
            })
            .collect();
        Batch::from_samples(&samples).unwrap()
    }

    #[test]
    fn bundle_shapes() {
        for sizes in [vec![10, 16, 8, 4], vec![6, 5, 4]] {
            let a = arch(&sizes);
            let m = DbnModel::init(&a, 1).unwrap();
            let g = total_gradient(&m, &batch(8, sizes[0], 2), &TrainConfig::default(), &mut seeded(3, &[])).unwrap();
            assert_eq!(g.architecture(), a);
            assert_eq!(g.batch_size, 8);
        }
        let a = arch(&[6, 5, 4]);
        let g = GradientBundle::zeros(&a);
        assert!(g.rbms.is_empty());
    }

    #[test]
    fn blocks_match_standalone_operations() {
        let a = arch(&[6, 5, 3, 4]);
        let m = DbnModel::init(&a, 7).unwrap();
        let b = batch(10, 6, 8);
        let cfg = TrainConfig { cd_steps: 2, ..TrainConfig::default() };
        let g = total_gradient(&m, &b, &cfg, &mut seeded(1, &[])).unwrap();

        let mut rng = seeded(1, &[]);
        let grbm = cd_gradient(&m.grbm, b.features.view(), 2, &mut rng).unwrap();
        let h1 = m.grbm.hidden_probs_batch(b.features.view());
        let rbm = cd_gradient(&m.rbms[0], h1.view(), 2, &mut rng).unwrap();
        let h2 = m.rbms[0].hidden_probs_batch(h1.view());
        let head = m.head.gradient(h2.view(), &b.labels).unwrap();
        assert_eq!(g.grbm, grbm);
        assert_eq!(g.rbms[0], rbm);
        assert_eq!(g.head, head);
    }

    #[test]
    fn update_rules() {
        let a = arch(&[2, 2, 2]);
        let mut m = DbnModel::init(&a, 1).unwrap();
        let before = m.clone();
        m.apply_update(&GradientBundle::zeros(&a), 0.5).unwrap();
        assert!(m.bitwise_eq(&before));

        let mut flat = vec![0.0; a.param_count()];
        flat[0] = 2.0;
        let g = GradientBundle::unflatten(&flat, &a, 1).unwrap();
        m.grbm.weights[[0, 0]] = 1.0;
        m.apply_update(&g, 0.1).unwrap();
        assert!((m.grbm.weights[[0, 0]] - 1.2).abs() < 1e-15);
        assert_eq!(m.grbm.sigma, before.grbm.sigma);

        let other = GradientBundle::zeros(&arch(&[3, 2, 2]));
        assert!(m.apply_update(&other, 0.1).is_err());
    }

    #[test]
    fn twice_equals_double_step() {
        let a = arch(&[4, 3, 2, 3]);
        let flat: Vec<f64> = (0..a.param_count()).map(|i| (i as f64) * 0.25 - 3.0).collect();
        let g = GradientBundle::unflatten(&flat, &a, 1).unwrap();
        let mut m1 = DbnModel::init(&a, 2).unwrap();
        let mut m2 = m1.clone();
        m1.apply_update(&g, 0.125).unwrap();
        m1.apply_update(&g, 0.125).unwrap();
        m2.apply_update(&g, 0.25).unwrap();
        for (x, y) in m1.flatten().iter().zip(m2.flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let a = arch(&[4, 3, 2]);
        let m = DbnModel::init(&a, 2).unwrap();
        let empty = Batch { features: Array2::zeros((0, 4)), labels: vec![] };
        assert!(total_gradient(&m, &empty, &TrainConfig::default(), &mut seeded(0, &[])).is_err());
        let wide = batch(3, 5, 0);
        assert!(total_gradient(&m, &wide, &TrainConfig::default(), &mut seeded(0, &[])).is_err());
    }

    proptest! {
        #[test]
        fn bundle_flat_round_trip(hidden in prop::collection::vec(1usize..6, 1..4), d in 1usize..6, u in 2usize..5, seed: u64) {
            let a = Architecture::new(d, hidden, u).unwrap();
            let mut rng = seeded(seed, &[]);
            let flat: Vec<f64> = (0..a.param_count()).map(|_| rng.random::<f64>() - 0.5).collect();
            let g = GradientBundle::unflatten(&flat, &a, 3).unwrap();
            prop_assert_eq!(g.flatten(), flat.clone());
            let m = DbnModel::unflatten(&flat, &a).unwrap();
            prop_assert_eq!(m.flatten(), flat);
        }
    }
}
