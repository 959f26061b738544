//! Shared fixtures for the criterion benchmarks.

use chainsentry::dataset::{generate_synthetic, Dataset, ScalerParams, SynthConfig};
use chainsentry::dbn::{Architecture, Batch};
use chainsentry::{DbnModel, Result};

/// Standardized desk-scale data for node 1.
pub fn node_data(seed: u64) -> Result<Dataset> {
    let nodes = generate_synthetic(&SynthConfig::desk_scale(seed))?;
    let data = nodes.into_iter().next().expect("desk scale has three nodes");
    ScalerParams::fit(&data)?.transform(&data)
}

/// The default network for `data`.
pub fn model(data: &Dataset, hidden: &[usize], seed: u64) -> Result<DbnModel> {
    let arch = Architecture::new(data.feature_dim(), hidden.to_vec(), data.classes())?;
    DbnModel::init(&arch, seed)
}

pub fn batch(data: &Dataset, size: usize) -> Result<Batch> {
    Batch::from_samples(data.samples().iter().take(size))
}
