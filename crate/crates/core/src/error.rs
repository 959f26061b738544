use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while decoding a wire frame. Each variant is distinguishable so
/// a receiver can tell a foreign sender from a damaged one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("foreign protocol: bad magic {0:02x?}")]
    ForeignProtocol([u8; 4]),
    #[error("unsupported version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownMessageType(u8),
    #[error("corrupt frame: crc {actual:#010x} does not match {expected:#010x}")]
    CorruptFrame { expected: u32, actual: u32 },
    #[error("incomplete frame: need {needed} bytes, have {available}")]
    IncompleteFrame { needed: usize, available: usize },
    #[error("trailing bytes after frame: {0}")]
    TrailingBytes(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Frame(#[from] FrameError),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("round {round}: timed out waiting for nodes {missing:?}")]
    Timeout { round: u32, missing: Vec<u16> },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures caused by the exchange layer rather than the data
    /// or the model.
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            Error::Frame(_) | Error::Protocol(_) | Error::Timeout { .. }
        )
    }
}
