use std::time::Duration;

use rand::seq::index;

use super::average::average_flat;
use crate::dataset::{Dataset, Sample};
use crate::dbn::{total_gradient_with_loss, Batch};
use crate::dbn::{DbnModel, GradientBundle, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::transport::{RoundMessage, Transport};

/// Orders samples by label, then by features under `total_cmp`.
pub(crate) fn canonical_order(samples: &mut [Sample]) {
    samples.sort_by(|a, b| {
        a.label.cmp(&b.label).then_with(|| {
            a.features
                .iter()
                .zip(&b.features)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

/// Default sampling seed of node `id` under the run seed.
pub fn node_seed(run_seed: u64, id: u16) -> u64 {
    derive_seed(run_seed, &[u64::from(id)])
}

/// One training participant: its model copy, its private data and the seed
/// from which every per-iteration random stream is derived.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: u16,
    pub model: DbnModel,
    samples: Vec<Sample>,
    seed: u64,
    iteration: u32,
}

impl NodeState {
    pub fn new(node_id: u16, model: DbnModel, data: &Dataset, seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data(format!("node {node_id} has no training data")));
        }
        if data.feature_dim() != model.input_dim() {
            return Err(Error::shape(format!(
                "node {node_id} data has {} features, model expects {}",
                data.feature_dim(),
                model.input_dim()
            )));
        }
        let mut samples = data.samples().to_vec();
        canonical_order(&mut samples);
        Ok(NodeState {
            node_id,
            model,
            samples,
            seed,
            iteration: 0,
        })
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Random stream for `iteration`; drives both batch selection and Gibbs
    /// sampling.
    fn stream(&self, iteration: u32) -> SeededRng {
        seeded(self.seed, &[u64::from(iteration)])
    }

    /// Draws the mini-batch for `iteration` without replacement.
    fn batch(&self, rng: &mut SeededRng, size: usize) -> Result<Batch> {
        let n = self.samples.len();
        let picks = index::sample(rng, n, size.min(n));
        Batch::from_samples(picks.iter().map(|i| &self.samples[i]))
    }

    /// Local gradient and batch loss for the next iteration.
    pub fn local_gradient(&self, config: &TrainConfig) -> Result<(GradientBundle, f64)> {
        let mut rng = self.stream(self.iteration + 1);
        let batch = self.batch(&mut rng, config.batch_size)?;
        total_gradient_with_loss(&self.model, &batch, config, &mut rng)
    }

    /// Applies `gradient` and advances the iteration counter.
    pub fn step(&mut self, gradient: &GradientBundle, learning_rate: f64) -> Result<()> {
        self.model.apply_update(gradient, learning_rate)?;
        self.iteration += 1;
        Ok(())
    }

    /// One purely local iteration.
    pub fn local_step(&mut self, config: &TrainConfig) -> Result<f64> {
        let (g, loss) = self.local_gradient(config)?;
        self.step(&g, config.learning_rate)?;
        Ok(loss)
    }

    /// One collaborative round: compute, broadcast, gather the `L − 1` peer
    /// gradients, average all `L` of them and apply the same update.
    pub fn collaborative_step<T: Transport + ?Sized>(
        &mut self,
        transport: &T,
        config: &TrainConfig,
        timeout: Duration,
    ) -> Result<f64> {
        if transport.node_id() != self.node_id {
            return Err(Error::config(format!(
                "node {} driven through the endpoint of node {}",
                self.node_id,
                transport.node_id()
            )));
        }
        let round = self.iteration + 1;
        let (own, loss) = self.local_gradient(config)?;
        let arch = own.architecture();
        let own_flat = own.flatten();
        transport.broadcast(&RoundMessage {
            round,
            node_id: self.node_id,
            gradient: own_flat.clone(),
        })?;
        let peers = transport.gather(round, timeout)?;
        let mut views: Vec<&[f64]> = Vec::with_capacity(peers.len() + 1);
        views.push(&own_flat);
        for m in &peers {
            if m.gradient.len() != own_flat.len() {
                return Err(Error::Protocol(format!(
                    "node {} sent {} values in round {round}, expected {}",
                    m.node_id,
                    m.gradient.len(),
                    own_flat.len()
                )));
            }
            views.push(&m.gradient);
        }
        let mean = average_flat(&views)?;
        let averaged = GradientBundle::unflatten(&mean, &arch, own.batch_size)?;
        self.step(&averaged, config.learning_rate)?;
        Ok(loss)
    }
}
