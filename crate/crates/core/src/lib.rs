//! Collaborative cyberattack detection for blockchain mining nodes.
//!
//! Every node trains a deep belief network (one Gaussian RBM, a stack of
//! binary RBMs and a softmax head) on its private traffic features. Nodes
//! never exchange raw data: after each iteration they broadcast their
//! gradient to all peers, average the `L` gradients and apply the same
//! ascent step, so every node ends the round holding the same global model.
//!
//! Modules:
//!
//! - [`dataset`]: synthetic traffic generator, CSV ingestion, scaling, splits, PCA.
//! - [`dbn`]: layers, contrastive divergence, softmax head, model files.
//! - [`collab`]: the collaborative, centralized and local training schemes.
//! - [`transport`]: wire framing plus in-process and TCP delivery.
//! - [`eval`]: confusion matrices and the reported metrics.
//! - [`detect`]: record-by-record streaming classification.

pub mod collab;
pub mod dataset;
pub mod dbn;
pub mod detect;
pub mod error;
pub mod rng;
pub mod eval;
pub mod experiment;
pub mod transport;

pub use collab::{CollabConfig, RoundRecord, Scheme, TransportKind};
pub use dataset::{ClassLabel, Dataset, Sample, ScalerParams, SynthConfig};
pub use dbn::{Architecture, DbnModel, GradientBundle, TrainConfig};
pub use error::{Error, FrameError, Result};
pub use eval::{ConfusionMatrix, EvalReport, Metrics};
pub use transport::{RoundMessage, Transport};
