use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClassLabel, Dataset, Provenance, Sample};
use crate::error::{Error, Result};
use crate::rng::{seeded, SeededRng};

/// Distance between the Normal centre and the BP/FoT centres at zero overlap.
const MAX_SEPARATION: f64 = 6.0;
/// Distance of the DoS centre from the Normal centre; independent of overlap.
const DOS_DISTANCE: f64 = 8.0;

/// Explicit Gaussian cluster for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub mean: Vec<f64>,
    /// Row-major `d × d` covariance; must be symmetric positive definite.
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Samples per class for every node: `per_class[node][class]`.
    pub per_class: Vec<Vec<usize>>,
    pub feature_dim: usize,
    /// 0 keeps Normal, BP and FoT apart; 1 stacks them on one centre.
    pub overlap: f64,
    /// Length of the per-node, per-class offset applied to cluster centres.
    pub node_shift: f64,
    /// Overrides the overlap-derived geometry when present.
    pub clusters: Option<Vec<ClusterSpec>>,
    pub seed: u64,
}

impl SynthConfig {
    pub const DEFAULT_FEATURES: usize = 10;
    pub const DEFAULT_OVERLAP: f64 = 0.3;
    pub const DEFAULT_NODE_SHIFT: f64 = 3.0;

    /// Every node gets the same per-class counts.
    pub fn uniform(nodes: usize, per_class: &[usize], feature_dim: usize, seed: u64) -> Self {
        SynthConfig {
            per_class: vec![per_class.to_vec(); nodes],
            feature_dim,
            overlap: Self::DEFAULT_OVERLAP,
            node_shift: Self::DEFAULT_NODE_SHIFT,
            clusters: None,
            seed,
        }
    }

    /// Three nodes with 3000/300/300/300 samples each: the 10:1:1:1 ratio
    /// of the laboratory capture scaled down tenfold.
    pub fn desk_scale(seed: u64) -> Self {
        Self::uniform(3, &[3000, 300, 300, 300], Self::DEFAULT_FEATURES, seed)
    }

    /// Three nodes of 3900 samples where node 1 never saw FoT and node 3
    /// never saw BP; the remaining attack classes absorb the missing share.
    pub fn heterogeneous(seed: u64) -> Self {
        SynthConfig {
            per_class: vec![
                vec![3000, 450, 450, 0],
                vec![3000, 300, 300, 300],
                vec![3000, 0, 450, 450],
            ],
            ..Self::desk_scale(seed)
        }
    }

    pub fn nodes(&self) -> usize {
        self.per_class.len()
    }

    pub fn classes(&self) -> usize {
        self.per_class.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_class.is_empty() {
            return Err(Error::config("at least one node is required"));
        }
        let classes = self.classes();
        if classes < 2 {
            return Err(Error::config("at least two classes are required"));
        }
        if self.per_class.iter().any(|c| c.len() != classes) {
            return Err(Error::config("every node must list a count for each class"));
        }
        if self.feature_dim == 0 {
            return Err(Error::config("feature dimension must be positive"));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::config(format!("overlap {} not in [0, 1]", self.overlap)));
        }
        if !(self.node_shift.is_finite() && self.node_shift >= 0.0) {
            return Err(Error::config("node shift must be finite and non-negative"));
        }
        if let Some(clusters) = &self.clusters {
            if clusters.len() != classes {
                return Err(Error::config(format!(
                    "{} clusters given for {classes} classes",
                    clusters.len()
                )));
            }
        }
        Ok(())
    }
}

struct Cluster {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

fn random_direction(rng: &mut SeededRng, dim: usize) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn build_clusters(config: &SynthConfig) -> Result<Vec<Cluster>> {
    let d = config.feature_dim;
    if let Some(specs) = &config.clusters {
        return specs
            .iter()
            .enumerate()
            .map(|(c, spec)| {
                if spec.mean.len() != d || spec.covariance.len() != d {
                    return Err(Error::config(format!("cluster {c}: expected dimension {d}")));
                }
                if spec.covariance.iter().any(|row| row.len() != d) {
                    return Err(Error::config(format!("cluster {c}: covariance is not {d}x{d}")));
                }
                let cov = DMatrix::from_fn(d, d, |i, j| spec.covariance[i][j]);
                if (&cov - cov.transpose()).abs().max() > 1e-12 {
                    return Err(Error::config(format!("cluster {c}: covariance is not symmetric")));
                }
                let chol = cov.cholesky().ok_or_else(|| {
                    Error::config(format!("cluster {c}: covariance is not positive definite"))
                })?;
                Ok(Cluster {
                    mean: DVector::from_column_slice(&spec.mean),
                    chol: chol.l(),
                })
            })
            .collect();
    }

    let mut rng = seeded(config.seed, &[0x6e6f_6465]);
    let separation = (1.0 - config.overlap) * MAX_SEPARATION;
    Ok((0..config.classes())
        .map(|c| {
            let direction = random_direction(&mut rng, d);
            let mean = match c {
                0 => DVector::zeros(d),
                2 => direction * DOS_DISTANCE,
                _ => direction * separation,
            };
            Cluster {
                mean,
                chol: DMatrix::identity(d, d),
            }
        })
        .collect())
}

/// Draws one dataset per node from per-class Gaussian clusters.
///
/// Class centres are shared by all nodes; each node additionally moves every
/// centre by its own random offset of length `node_shift`, so the union of
/// the nodes is more spread out than any single node.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<Dataset>> {
    config.validate()?;
    let clusters = build_clusters(config)?;
    let d = config.feature_dim;
    let classes = config.classes();

    config
        .per_class
        .iter()
        .enumerate()
        .map(|(node, counts)| {
            let mut rng = seeded(config.seed, &[node as u64 + 1]);
            let mut samples = Vec::with_capacity(counts.iter().sum());
            for (c, &count) in counts.iter().enumerate() {
                let offset = random_direction(&mut rng, d) * config.node_shift;
                let centre = &clusters[c].mean + offset;
                let label = ClassLabel::from_index(c, classes)?;
                for _ in 0..count {
                    let z: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                    let x = &centre + &clusters[c].chol * z;
                    samples.push(Sample {
                        features: x.iter().copied().collect(),
                        label,
                    });
                }
            }
            samples.shuffle(&mut rng);
            Dataset::new(
                samples,
                d,
                classes,
                Provenance::Synthetic {
                    seed: config.seed,
                    node: node + 1,
                },
            )
        })
        .collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::desk_scale(42)
    }
}
