use crate::dbn::GradientBundle;
use crate::error::{Error, Result};

/// Element-wise mean of `L` flat gradients.
///
/// The values at each position are summed in ascending `total_cmp` order as a
/// running mean, so the result is independent of the order in which peers
/// delivered their gradients and `L` equal inputs return that input exactly.
pub fn average_flat(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Protocol("no gradients to average".into()))?;
    let n = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::Protocol(format!(
            "gradient lengths differ: {n} and {}",
            bad.len()
        )));
    }
    let mut column = Vec::with_capacity(vectors.len());
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        column.clear();
        column.extend(vectors.iter().map(|v| v[j]));
        column.sort_unstable_by(f64::total_cmp);
        let mut mean = 0.0;
        for (k, x) in column.iter().enumerate() {
            mean += (x - mean) / (k + 1) as f64;
        }
        out.push(mean);
    }
    Ok(out)
}

/// Averages exactly `expected` shape-congruent bundles.
pub fn average_gradients(bundles: &[GradientBundle], expected: usize) -> Result<GradientBundle> {
    if bundles.len() != expected {
        return Err(Error::Protocol(format!(
            "expected {expected} gradients, got {}",
            bundles.len()
        )));
    }
    let arch = bundles
        .first()
        .ok_or_else(|| Error::Protocol("no gradients to average".into()))?
        .architecture();
    if bundles.iter().any(|b| b.architecture() != arch) {
        return Err(Error::Protocol("gradients disagree on architecture".into()));
    }
    let flats: Vec<Vec<f64>> = bundles.iter().map(GradientBundle::flatten).collect();
    let views: Vec<&[f64]> = flats.iter().map(Vec::as_slice).collect();
    let mean = average_flat(&views)?;
    let batch = bundles.iter().map(|b| b.batch_size).sum();
    GradientBundle::unflatten(&mean, &arch, batch)
}
