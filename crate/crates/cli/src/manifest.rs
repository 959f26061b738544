use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Record of one command invocation. Replaying `args` reproduces the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector after the program name.
    pub args: Vec<String>,
    pub version: String,
    /// Effective configuration after defaults were applied.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix: f64,
    /// Named wall-clock phases in seconds.
    pub timings: BTreeMap<String, f64>,
    #[serde(skip)]
    clock: Option<Instant>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        RunManifest {
            command: command.to_owned(),
            args: argv.iter().skip(1).cloned().collect(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: serde_json::Value::Null,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
            timings: BTreeMap::new(),
            clock: Some(Instant::now()),
        }
    }

    pub fn config<T: Serialize>(&mut self, config: &T) -> CliResult {
        self.config = serde_json::to_value(config)
            .map_err(|e| CliError::usage(format!("cannot record configuration: {e}")))?;
        Ok(())
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    pub fn time(&mut self, phase: &str, secs: f64) {
        self.timings.insert(phase.to_owned(), secs);
    }

    pub fn write(mut self, path: &Path) -> CliResult {
        if let Some(c) = self.clock {
            self.timings.insert("total".into(), c.elapsed().as_secs_f64());
        }
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &self)
            .map_err(|e| CliError::Core(chainsentry::Error::Io(std::io::Error::other(e))))?;
        w.write_all(b"\n")?;
        w.flush()?;
        log::debug!("manifest written to {}", path.display());
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let file = File::open(path)?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| {
            CliError::Core(chainsentry::Error::Data(format!(
                "{}: not a run manifest: {e}",
                path.display()
            )))
        })
    }
}
