use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, Sample};
use crate::error::{Error, Result};

/// Per-feature population mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    /// Strictly positive; constant features are recorded as 1.
    pub stds: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data("cannot fit a scaler on an empty dataset".into()));
        }
        let d = train.feature_dim();
        let n = train.len() as f64;
        let mut means = vec![0.0; d];
        for s in train.samples() {
            for (m, x) in means.iter_mut().zip(&s.features) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for s in train.samples() {
            for ((v, x), m) in vars.iter_mut().zip(&s.features).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(ScalerParams { means, stds })
    }

    pub fn feature_dim(&self) -> usize {
        self.means.len()
    }

    /// Writes the parameters as JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path.as_ref())?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| Error::Data(format!("cannot write scaler: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        let params: ScalerParams = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Data(format!("{}: not a scaler file: {e}", path.display())))?;
        if params.means.len() != params.stds.len()
            || params.stds.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || params.means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::Data(format!("{}: invalid scaler parameters", path.display())));
        }
        Ok(params)
    }

    pub fn transform_features(&self, features: &mut [f64]) {
        for ((x, m), s) in features.iter_mut().zip(&self.means).zip(&self.stds) {
            *x = (*x - m) / s;
        }
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.feature_dim() != self.means.len() {
            return Err(Error::shape(format!(
                "scaler fitted on {} features, data has {}",
                self.means.len(),
                data.feature_dim()
            )));
        }
        let samples = data
            .samples()
            .iter()
            .map(|s| {
                let mut features = s.features.clone();
                self.transform_features(&mut features);
                Sample {
                    features,
                    label: s.label,
                }
            })
            .collect();
        Ok(data.with_samples(samples, Provenance::Derived("standardized".into())))
    }
}

/// Fits on `train` only and applies the same affine map to `train` and every
/// dataset in `others`.
pub fn standardize(train: &Dataset, others: &[Dataset]) -> Result<(ScalerParams, Dataset, Vec<Dataset>)> {
    let params = ScalerParams::fit(train)?;
    let train_std = params.transform(train)?;
    let others_std = others
        .iter()
        .map(|d| params.transform(d))
        .collect::<Result<Vec<_>>>()?;
    Ok((params, train_std, others_std))
}
