//! Training schemes.
//!
//! * [`Scheme::Pclm`]: every node computes a gradient on its own mini-batch,
//!   broadcasts it, averages all `L` gradients and applies the shared update.
//! * [`Scheme::Clm`]: one network trained on the union of all node data.
//! * [`Scheme::Llm`]: each node trains alone.
//!
//! All three share the same per-iteration procedure, so with one node and one
//! seed they produce bitwise-identical trajectories.

mod average;
mod history;
mod node;
mod schemes;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dbn::TrainConfig;
use crate::error::{Error, Result};

pub use average::{average_flat, average_gradients};
pub use history::{write_history_csv, write_history_csv_to, RoundRecord};
pub use node::{node_seed, NodeState};
pub use schemes::{
    run_round, train, train_clm, train_llm, train_pclm, train_pclm_node, TrainOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pclm,
    Clm,
    Llm,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Pclm, Scheme::Clm, Scheme::Llm];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Pclm => "pclm",
            Scheme::Clm => "clm",
            Scheme::Llm => "llm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pclm" => Ok(Scheme::Pclm),
            "clm" => Ok(Scheme::Clm),
            "llm" => Ok(Scheme::Llm),
            other => Err(Error::config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// How collaborative rounds move gradients between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    InProcess,
    /// A TCP mesh on the loopback interface, one listener per node.
    Socket,
}

impl FromStr for TransportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inproc" | "inprocess" | "in-process" => Ok(TransportKind::InProcess),
            "socket" | "tcp" => Ok(TransportKind::Socket),
            other => Err(Error::config(format!("unknown transport `{other}`"))),
        }
    }
}

/// Stops training once evaluation accuracy moved less than `min_delta`
/// over the last `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauRule {
    pub window: u32,
    pub min_delta: f64,
}

impl Default for PlateauRule {
    fn default() -> Self {
        PlateauRule {
            window: 50,
            min_delta: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollabConfig {
    pub train: TrainConfig,
    /// Number of participating nodes `L`.
    pub nodes: usize,
    pub transport: TransportKind,
    /// How long a node waits for its peers in each round.
    #[serde(with = "duration_ms")]
    pub timeout: Duration,
    /// Evaluate every this many iterations (the last iteration is always
    /// evaluated). Zero disables evaluation.
    pub eval_every: u32,
    pub plateau: Option<PlateauRule>,
    /// Per-node sampling seeds overriding [`node_seed`].
    pub node_seeds: Option<Vec<u64>>,
}

impl CollabConfig {
    pub fn new(train: TrainConfig, nodes: usize) -> Self {
        CollabConfig {
            train,
            nodes,
            transport: TransportKind::InProcess,
            timeout: crate::transport::DEFAULT_TIMEOUT,
            eval_every: 10,
            plateau: None,
            node_seeds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.nodes == 0 {
            return Err(Error::config("at least one node is required"));
        }
        if self.nodes > usize::from(u16::MAX) {
            return Err(Error::config("node ids are limited to 16 bits"));
        }
        if self.train.iterations > u32::MAX as usize {
            return Err(Error::config("iteration budget exceeds the round counter"));
        }
        if let Some(seeds) = &self.node_seeds {
            if seeds.len() != self.nodes {
                return Err(Error::config(format!(
                    "{} node seeds given for {} nodes",
                    seeds.len(),
                    self.nodes
                )));
            }
        }
        if let Some(p) = &self.plateau {
            if p.window == 0 || p.min_delta.is_nan() || p.min_delta < 0.0 {
                return Err(Error::config("plateau rule needs a positive window"));
            }
        }
        Ok(())
    }

    /// Sampling seed of node `id` (1-based).
    pub fn seed_for(&self, id: u16) -> u64 {
        match &self.node_seeds {
            Some(s) => s[usize::from(id) - 1],
            None => node_seed(self.train.seed, id),
        }
    }
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}
