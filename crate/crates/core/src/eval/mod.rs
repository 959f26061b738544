//! Confusion matrices and detection metrics.
//!
//! Accuracy is reported two ways: the macro-averaged one-vs-rest accuracy
//! `(1/U) Σ_u (TP_u + TN_u) / n` used throughout the experiments, and plain
//! multiclass accuracy `trace / n`. For `U = 2` they coincide.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, Dataset};
use crate::dbn::DbnModel;
use crate::error::{Error, Result};

/// `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

/// Per-class one-vs-rest counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let u = counts.len();
        if u < 2 || counts.iter().any(|r| r.len() != u) {
            return Err(Error::shape("confusion matrix must be square with at least 2 classes"));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) -> Result<()> {
        let u = self.classes();
        if truth.index() >= u || predicted.index() >= u {
            return Err(Error::Data(format!(
                "label pair ({}, {}) outside {u} classes",
                truth.value(),
                predicted.value()
            )));
        }
        self.counts[truth.index()][predicted.index()] += 1;
        Ok(())
    }

    /// Element-wise sum.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes() != self.classes() {
            return Err(Error::shape("cannot merge confusion matrices of different size"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> ConfusionMatrix {
        let u = self.classes();
        ConfusionMatrix {
            counts: (0..u).map(|i| (0..u).map(|j| self.counts[j][i]).collect()).collect(),
        }
    }

    pub fn binary(&self, class: usize) -> BinaryCounts {
        let n = self.total();
        let tp = self.counts[class][class];
        let actual: u64 = self.counts[class].iter().sum();
        let predicted: u64 = self.counts.iter().map(|r| r[class]).sum();
        let fn_ = actual - tp;
        let fp = predicted - tp;
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: n - tp - fp - fn_,
        }
    }

    fn require_samples(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::Data("confusion matrix is empty".into())),
            n => Ok(n as f64),
        }
    }

    /// Macro-averaged one-vs-rest accuracy.
    pub fn accuracy(&self) -> Result<f64> {
        self.require_samples()?;
        let u = self.classes();
        let sum: f64 = (0..u)
            .map(|c| {
                let b = self.binary(c);
                (b.tp + b.tn) as f64 / (b.tp + b.tn + b.fp + b.fn_) as f64
            })
            .sum();
        Ok(sum / u as f64)
    }

    /// Fraction of samples on the diagonal.
    pub fn plain_accuracy(&self) -> Result<f64> {
        let n = self.require_samples()?;
        let diag: u64 = (0..self.classes()).map(|c| self.counts[c][c]).sum();
        Ok(diag as f64 / n)
    }

    pub fn metrics(&self) -> Result<Metrics> {
        let accuracy = self.accuracy()?;
        let accuracy_plain = self.plain_accuracy()?;
        let per_class: Vec<ClassMetrics> = (0..self.classes())
            .map(|c| {
                let b = self.binary(c);
                let predicted = b.tp + b.fp;
                let support = b.tp + b.fn_;
                ClassMetrics {
                    class: c as u32 + 1,
                    name: ClassLabel::from_index(c, self.classes()).expect("in range").name(),
                    precision: ratio(b.tp, predicted),
                    recall: ratio(b.tp, support),
                    support,
                    predicted,
                    precision_undefined: predicted == 0,
                    recall_undefined: support == 0,
                }
            })
            .collect();
        let u = per_class.len() as f64;
        Ok(Metrics {
            accuracy,
            accuracy_plain,
            macro_precision: per_class.iter().map(|c| c.precision).sum::<f64>() / u,
            macro_recall: per_class.iter().map(|c| c.recall).sum::<f64>() / u,
            per_class,
        })
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Builds the confusion matrix of `predicted` against `truth`.
pub fn confusion(truth: &[ClassLabel], predicted: &[ClassLabel], classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::shape(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if classes < 2 {
        return Err(Error::config("need at least two classes"));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&t, &p) in truth.iter().zip(predicted) {
        cm.record(t, p)?;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u32,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub support: u64,
    pub predicted: u64,
    /// No sample was predicted as this class; precision is reported as 0.
    pub precision_undefined: bool,
    /// No sample of this class exists; recall is reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Macro one-vs-rest accuracy.
    pub accuracy: f64,
    pub accuracy_plain: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// JSON evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: String,
    pub node: Option<u32>,
    pub accuracy: f64,
    pub accuracy_plain: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    pub fn new(scheme: impl Into<String>, node: Option<u32>, cm: &ConfusionMatrix) -> Result<Self> {
        let m = cm.metrics()?;
        Ok(EvalReport {
            scheme: scheme.into(),
            node,
            accuracy: m.accuracy,
            accuracy_plain: m.accuracy_plain,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            per_class: m.per_class,
            confusion: cm.counts().to_vec(),
        })
    }
}

/// Confusion matrix of `model`'s predictions over a labelled dataset.
pub fn evaluate_model(model: &DbnModel, data: &Dataset) -> Result<ConfusionMatrix> {
    if data.feature_dim() != model.input_dim() {
        return Err(Error::shape(format!(
            "dataset has {} features, model expects {}",
            data.feature_dim(),
            model.input_dim()
        )));
    }
    let predicted = model.predict_samples(data.samples())?;
    confusion(&data.labels(), &predicted, model.classes())
}
