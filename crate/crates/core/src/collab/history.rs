use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Scheme;
use crate::error::{Error, Result};

/// Outcome of one iteration across all participating nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub iteration: u32,
    /// Node labels in the order of `losses`. The centralized model is node 0.
    pub nodes: Vec<u16>,
    /// Cross-entropy of each node's mini-batch before the update.
    pub losses: Vec<f64>,
    /// Evaluation accuracy after the update, when this iteration was evaluated.
    pub accuracy: Option<Vec<f64>>,
    pub duration: Duration,
}

impl RoundRecord {
    pub fn mean_accuracy(&self) -> Option<f64> {
        self.accuracy
            .as_ref()
            .filter(|a| !a.is_empty())
            .map(|a| a.iter().sum::<f64>() / a.len() as f64)
    }
}

/// Writes `iteration,scheme,node,loss,accuracy` rows, one per node per
/// iteration. Unevaluated iterations leave `accuracy` empty.
pub fn write_history_csv_to<W: Write>(scheme: Scheme, records: &[RoundRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Data(format!("history export failed: {e}"));
    w.write_record(["iteration", "scheme", "node", "loss", "accuracy"])
        .map_err(csv_err)?;
    let mut last = 0;
    for r in records {
        if r.iteration <= last {
            return Err(Error::Data(format!(
                "history iteration {} follows {last}",
                r.iteration
            )));
        }
        last = r.iteration;
        for (k, (node, loss)) in r.nodes.iter().zip(&r.losses).enumerate() {
            let acc = r
                .accuracy
                .as_ref()
                .and_then(|a| a.get(k))
                .map(f64::to_string)
                .unwrap_or_default();
            w.write_record([
                r.iteration.to_string(),
                scheme.to_string(),
                node.to_string(),
                loss.to_string(),
                acc,
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_history_csv(scheme: Scheme, records: &[RoundRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_history_csv_to(scheme, records, BufWriter::new(file))
}
