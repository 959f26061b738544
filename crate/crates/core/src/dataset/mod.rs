//! Labeled traffic-feature datasets.
//!
//! On disk labels are 1-based (`Class 1` = Normal); in memory a
//! [`ClassLabel`] holds the 0-based index used by the softmax head.

mod csv_io;
mod pca;
mod scale;
mod split;
mod synth;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{
    load_csv, read_csv, write_csv, write_csv_to, write_pca_csv, CsvHeader, Record, RecordReader,
};
pub use pca::{pca_project, PcaProjection};
pub use scale::{standardize, ScalerParams};
pub use split::split;
pub use synth::{generate_synthetic, ClusterSpec, SynthConfig};

/// Number of traffic classes in the default setting: Normal, BP, DoS, FoT.
pub const DEFAULT_CLASSES: usize = 4;

/// Zero-based class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(u16);

impl ClassLabel {
    pub const NORMAL: ClassLabel = ClassLabel(0);
    pub const BRUTE_FORCE_PASSWORD: ClassLabel = ClassLabel(1);
    pub const DENIAL_OF_SERVICE: ClassLabel = ClassLabel(2);
    pub const FLOODING_OF_TRANSACTIONS: ClassLabel = ClassLabel(3);

    /// Builds a label from its 0-based index, checking it against `classes`.
    pub fn from_index(index: usize, classes: usize) -> Result<Self> {
        if index >= classes {
            return Err(Error::Data(format!(
                "class index {index} out of range for {classes} classes"
            )));
        }
        Ok(ClassLabel(index as u16))
    }

    /// Builds a label from its 1-based on-disk value.
    pub fn from_value(value: i64, classes: usize) -> Result<Self> {
        if value < 1 || value > classes as i64 {
            return Err(Error::Data(format!(
                "label {value} out of range 1..={classes}"
            )));
        }
        Ok(ClassLabel((value - 1) as u16))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 1-based value as written in CSV files and reports.
    pub fn value(self) -> u32 {
        self.0 as u32 + 1
    }

    pub fn name(self) -> String {
        match self.0 {
            0 => "Normal".into(),
            1 => "BP".into(),
            2 => "DoS".into(),
            3 => "FoT".into(),
            _ => format!("Class {}", self.value()),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (class {})", self.name(), self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Synthetic { seed: u64, node: usize },
    File(PathBuf),
    Derived(String),
}

/// An immutable, dimension-uniform collection of labeled samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    feature_dim: usize,
    classes: usize,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        samples: Vec<Sample>,
        feature_dim: usize,
        classes: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::config(format!("need at least 2 classes, got {classes}")));
        }
        if feature_dim == 0 {
            return Err(Error::config("feature dimension must be positive"));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != feature_dim {
                return Err(Error::shape(format!(
                    "sample {i} has {} features, expected {feature_dim}",
                    s.features.len()
                )));
            }
            if s.label.index() >= classes {
                return Err(Error::Data(format!(
                    "sample {i} has label {} outside {classes} classes",
                    s.label.value()
                )));
            }
            if let Some(j) = s.features.iter().position(|x| !x.is_finite()) {
                return Err(Error::Data(format!("sample {i} feature {j} is not finite")));
            }
        }
        Ok(Dataset {
            samples,
            feature_dim,
            classes,
            provenance,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Number of samples per class, indexed by 0-based class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    /// Concatenates datasets in the given order.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Data("nothing to concatenate".into()))?;
        let mut samples = Vec::with_capacity(parts.iter().map(Dataset::len).sum());
        for p in parts {
            if p.feature_dim != first.feature_dim || p.classes != first.classes {
                return Err(Error::shape(format!(
                    "cannot concatenate {}-dim/{}-class data with {}-dim/{}-class data",
                    p.feature_dim, p.classes, first.feature_dim, first.classes
                )));
            }
            samples.extend_from_slice(&p.samples);
        }
        Ok(Dataset {
            samples,
            feature_dim: first.feature_dim,
            classes: first.classes,
            provenance: Provenance::Derived(format!("concat of {} datasets", parts.len())),
        })
    }

    pub(crate) fn with_samples(&self, samples: Vec<Sample>, provenance: Provenance) -> Dataset {
        Dataset {
            samples,
            feature_dim: self.feature_dim,
            classes: self.classes,
            provenance,
        }
    }
}
