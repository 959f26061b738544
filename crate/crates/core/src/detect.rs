//! Record-by-record classification of a live or recorded feature stream.
//!
//! Each record is classified as soon as it is read and produces one JSON
//! alert line. Time windows only group records for throughput reporting.

use std::io::{Read, Write};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::dataset::{RecordReader, ScalerParams};
use crate::dbn::{argmax, DbnModel};
use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, EvalReport};
use crate::ClassLabel;

pub const DEFAULT_WINDOW: Duration = Duration::from_secs(2);

/// One classified record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    /// Seconds since the Unix epoch at classification time.
    pub timestamp: f64,
    /// 1-based class number.
    pub predicted_class: u32,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectSummary {
    pub records: u64,
    pub elapsed_secs: f64,
    pub records_per_sec: f64,
    pub window_secs: f64,
    /// Windows in which at least one record arrived.
    pub windows: u64,
    pub max_records_per_window: u64,
    /// Present only when the input carried labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalReport>,
}

pub struct Detector<'a> {
    model: &'a DbnModel,
    scaler: Option<&'a ScalerParams>,
    window: Duration,
    scheme: String,
}

impl<'a> Detector<'a> {
    pub fn new(model: &'a DbnModel, scaler: Option<&'a ScalerParams>) -> Result<Self> {
        if let Some(s) = scaler {
            if s.feature_dim() != model.input_dim() {
                return Err(Error::shape(format!(
                    "scaler covers {} features, model expects {}",
                    s.feature_dim(),
                    model.input_dim()
                )));
            }
        }
        Ok(Detector {
            model,
            scaler,
            window: DEFAULT_WINDOW,
            scheme: "detect".into(),
        })
    }

    pub fn window(mut self, window: Duration) -> Result<Self> {
        if window.is_zero() {
            return Err(Error::config("detection window must be positive"));
        }
        self.window = window;
        Ok(self)
    }

    /// Label used for the `scheme` field of the metrics report.
    pub fn scheme(mut self, scheme: impl Into<String>) -> Self {
        self.scheme = scheme.into();
        self
    }

    /// Classifies one feature vector given in raw (unscaled) units.
    pub fn classify(&self, features: &mut [f64]) -> Result<(ClassLabel, Vec<f64>)> {
        if features.len() != self.model.input_dim() {
            return Err(Error::shape(format!(
                "record has {} features, model expects {}",
                features.len(),
                self.model.input_dim()
            )));
        }
        if let Some(s) = self.scaler {
            s.transform_features(features);
        }
        let p = self.model.predict_proba(ArrayView1::from(&*features))?;
        let label = ClassLabel::from_index(argmax(p.view()), self.model.classes())?;
        Ok((label, p.to_vec()))
    }

    /// Drains `records`, writing one JSON alert line per record to `alerts`.
    pub fn run<R: Read, W: Write>(&self, mut records: RecordReader<R>, mut alerts: W) -> Result<DetectSummary> {
        if records.header().feature_dim != self.model.input_dim() {
            return Err(Error::shape(format!(
                "stream has {} features, model expects {}",
                records.header().feature_dim,
                self.model.input_dim()
            )));
        }
        let mut cm = records
            .header()
            .has_label
            .then(|| ConfusionMatrix::new(self.model.classes()));
        let started = Instant::now();
        let mut count = 0u64;
        let mut windows = 0u64;
        let mut current_window = None;
        let mut in_window = 0u64;
        let mut max_in_window = 0u64;
        while let Some(mut rec) = records.next_record()? {
            let (predicted, probabilities) = self.classify(&mut rec.features)?;
            let timestamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64());
            let alert = Alert {
                timestamp,
                predicted_class: predicted.value(),
                probabilities,
            };
            serde_json::to_writer(&mut alerts, &alert)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            alerts.write_all(b"\n")?;
            if let (Some(cm), Some(truth)) = (cm.as_mut(), rec.label) {
                cm.record(truth, predicted)?;
            }
            count += 1;
            let w = (started.elapsed().as_nanos() / self.window.as_nanos()) as u64;
            if current_window != Some(w) {
                current_window = Some(w);
                windows += 1;
                in_window = 0;
            }
            in_window += 1;
            max_in_window = max_in_window.max(in_window);
        }
        alerts.flush()?;
        let elapsed = started.elapsed().as_secs_f64();
        let metrics = match cm {
            Some(cm) if cm.total() > 0 => Some(EvalReport::new(self.scheme.clone(), None, &cm)?),
            _ => None,
        };
        Ok(DetectSummary {
            records: count,
            elapsed_secs: elapsed,
            records_per_sec: if elapsed > 0.0 { count as f64 / elapsed } else { 0.0 },
            window_secs: self.window.as_secs_f64(),
            windows,
            max_records_per_window: max_in_window,
            metrics,
        })
    }
}
