use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::shape(format!("{what} has length {got}, expected {expected}")));
    }
    Ok(())
}

/// Gaussian-visible, binary-hidden RBM. `sigma` is the per-visible standard
/// deviation; training never updates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrbmLayer {
    /// `P × G`
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
    pub sigma: Array1<f64>,
}

/// Binary RBM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmLayer {
    /// `P* × G*`
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
}

/// Sufficient statistics of a batch of `(v, h)` pairs, averaged over the batch.
/// The gradient of a layer is the data moments minus the model moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub weights: Array2<f64>,
    pub visible: Array1<f64>,
    pub hidden: Array1<f64>,
}

/// Shared behaviour of the two energy-based layer types.
pub trait EnergyLayer {
    fn visible_dim(&self) -> usize;
    fn hidden_dim(&self) -> usize;
    fn hidden_bias(&self) -> &Array1<f64>;

    /// Pre-activation input each hidden unit receives from `v`.
    fn hidden_input(&self, v: ArrayView1<f64>) -> Array1<f64>;

    /// Draws a visible configuration from `p(v | h)`.
    fn sample_visible<R: Rng + ?Sized>(&self, h: ArrayView1<f64>, rng: &mut R) -> Array1<f64>;

    /// Adds `weight` times the statistics of one `(v, h)` pair into `acc`.
    fn accumulate(&self, acc: &mut Moments, v: ArrayView1<f64>, h: ArrayView1<f64>, weight: f64);

    /// Model moments computed exactly by enumeration, when the layer allows it.
    fn exact_model_moments(&self) -> Result<Moments>;

    fn hidden_probs(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let mut a = self.hidden_input(v);
        a += self.hidden_bias();
        a.mapv_inplace(logistic);
        a
    }

    fn hidden_probs_batch(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((batch.nrows(), self.hidden_dim()));
        for (row, v) in out.axis_iter_mut(Axis(0)).zip(batch.axis_iter(Axis(0))) {
            let h = self.hidden_probs(v);
            let mut row = row;
            row.assign(&h);
        }
        out
    }

    fn zero_moments(&self) -> Moments {
        Moments {
            weights: Array2::zeros((self.visible_dim(), self.hidden_dim())),
            visible: Array1::zeros(self.visible_dim()),
            hidden: Array1::zeros(self.hidden_dim()),
        }
    }

    /// `P(h_g = 1 | v)` for every hidden unit.
    fn hidden_conditional(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("visible vector", v.len(), self.visible_dim())?;
        Ok(self.hidden_probs(v))
    }
}

fn outer_add(acc: &mut Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>, weight: f64) {
    for (mut row, &x) in acc.axis_iter_mut(Axis(0)).zip(a.iter()) {
        let s = weight * x;
        row.scaled_add(s, &b);
    }
}

pub(crate) fn sample_bernoulli<R: Rng + ?Sized>(p: &Array1<f64>, rng: &mut R) -> Array1<f64> {
    p.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

impl GrbmLayer {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        GrbmLayer {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
            sigma: Array1::ones(visible),
        }
    }

    /// Energy of a joint configuration: real `v`, binary `h`.
    pub fn energy(&self, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64> {
        check_len("visible vector", v.len(), self.visible_dim())?;
        check_len("hidden vector", h.len(), self.hidden_dim())?;
        let mut e = 0.0;
        for p in 0..v.len() {
            let g2 = self.sigma[p] * self.sigma[p];
            e += (v[p] - self.visible_bias[p]).powi(2) / (2.0 * g2);
            let scaled = v[p] / self.sigma[p];
            for g in 0..h.len() {
                e -= self.weights[[p, g]] * h[g] * scaled;
            }
        }
        e -= self.hidden_bias.dot(&h);
        Ok(e)
    }

    /// Mean `b1 + σ ⊙ (W h)` and standard deviation `σ` of `p(v | h)`.
    pub fn visible_conditional(&self, h: ArrayView1<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
        check_len("hidden vector", h.len(), self.hidden_dim())?;
        Ok((self.visible_mean(h), self.sigma.clone()))
    }

    fn visible_mean(&self, h: ArrayView1<f64>) -> Array1<f64> {
        &self.visible_bias + &(&self.sigma * &self.weights.dot(&h))
    }

    pub fn validate(&self) -> Result<()> {
        let (p, g) = self.weights.dim();
        check_len("GRBM visible bias", self.visible_bias.len(), p)?;
        check_len("GRBM hidden bias", self.hidden_bias.len(), g)?;
        check_len("GRBM sigma", self.sigma.len(), p)?;
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Numeric("GRBM sigma must be finite and positive".into()));
        }
        Ok(())
    }
}

impl EnergyLayer for GrbmLayer {
    fn visible_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn hidden_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn hidden_bias(&self) -> &Array1<f64> {
        &self.hidden_bias
    }

    fn hidden_input(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let scaled = &v / &self.sigma;
        self.weights.t().dot(&scaled)
    }

    fn sample_visible<R: Rng + ?Sized>(&self, h: ArrayView1<f64>, rng: &mut R) -> Array1<f64> {
        let mean = self.visible_mean(h);
        let mut v = mean;
        for (x, s) in v.iter_mut().zip(self.sigma.iter()) {
            let z: f64 = StandardNormal.sample(rng);
            *x += s * z;
        }
        v
    }

    fn accumulate(&self, acc: &mut Moments, v: ArrayView1<f64>, h: ArrayView1<f64>, weight: f64) {
        let scaled = &v / &self.sigma;
        outer_add(&mut acc.weights, scaled.view(), h, weight);
        for p in 0..v.len() {
            let s2 = self.sigma[p] * self.sigma[p];
            acc.visible[p] += weight * (v[p] - self.visible_bias[p]) / s2;
        }
        acc.hidden.scaled_add(weight, &h);
    }

    fn exact_model_moments(&self) -> Result<Moments> {
        Err(Error::config(
            "exact model moments need binary visible units; a GRBM cannot be enumerated",
        ))
    }
}

/// Largest `P + G` for which enumeration of all joint states is allowed.
pub const MAX_ENUMERATION_UNITS: usize = 16;

fn bits(state: usize, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |i| ((state >> i) & 1) as f64)
}

impl RbmLayer {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        RbmLayer {
            weights: Array2::zeros((visible, hidden)),
            visible_bias: Array1::zeros(visible),
            hidden_bias: Array1::zeros(hidden),
        }
    }

    pub fn energy(&self, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64> {
        check_len("visible vector", v.len(), self.visible_dim())?;
        check_len("hidden vector", h.len(), self.hidden_dim())?;
        Ok(-self.visible_bias.dot(&v) - v.dot(&self.weights.dot(&h)) - self.hidden_bias.dot(&h))
    }

    /// `P(v_p = 1 | h)` for every visible unit.
    pub fn visible_conditional(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_len("hidden vector", h.len(), self.hidden_dim())?;
        Ok(self.visible_probs(h))
    }

    fn visible_probs(&self, h: ArrayView1<f64>) -> Array1<f64> {
        let mut a = self.weights.dot(&h);
        a += &self.visible_bias;
        a.mapv_inplace(logistic);
        a
    }

    pub fn validate(&self) -> Result<()> {
        let (p, g) = self.weights.dim();
        check_len("RBM visible bias", self.visible_bias.len(), p)?;
        check_len("RBM hidden bias", self.hidden_bias.len(), g)
    }
}

impl EnergyLayer for RbmLayer {
    fn visible_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn hidden_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn hidden_bias(&self) -> &Array1<f64> {
        &self.hidden_bias
    }

    fn hidden_input(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.weights.t().dot(&v)
    }

    fn sample_visible<R: Rng + ?Sized>(&self, h: ArrayView1<f64>, rng: &mut R) -> Array1<f64> {
        sample_bernoulli(&self.visible_probs(h), rng)
    }

    fn accumulate(&self, acc: &mut Moments, v: ArrayView1<f64>, h: ArrayView1<f64>, weight: f64) {
        outer_add(&mut acc.weights, v, h, weight);
        acc.visible.scaled_add(weight, &v);
        acc.hidden.scaled_add(weight, &h);
    }

    fn exact_model_moments(&self) -> Result<Moments> {
        let (p, g) = (self.visible_dim(), self.hidden_dim());
        if p + g > MAX_ENUMERATION_UNITS {
            return Err(Error::config(format!(
                "{p}+{g} units exceed the enumeration limit of {MAX_ENUMERATION_UNITS}"
            )));
        }
        let vs: Vec<Array1<f64>> = (0..1usize << p).map(|s| bits(s, p)).collect();
        let hs: Vec<Array1<f64>> = (0..1usize << g).map(|s| bits(s, g)).collect();
        let mut neg_energy = Vec::with_capacity(vs.len() * hs.len());
        for v in &vs {
            for h in &hs {
                neg_energy.push(-self.energy(v.view(), h.view())?);
            }
        }
        let max = neg_energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = neg_energy.iter().map(|e| (e - max).exp()).sum();
        let mut acc = self.zero_moments();
        let mut i = 0;
        for v in &vs {
            for h in &hs {
                let prob = (neg_energy[i] - max).exp() / z;
                self.accumulate(&mut acc, v.view(), h.view(), prob);
                i += 1;
            }
        }
        Ok(acc)
    }
}
