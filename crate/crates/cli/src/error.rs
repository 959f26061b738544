use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),

    /// Argument parsing failed; clap has already printed its message.
    #[error("{0}")]
    Clap(#[from] clap::Error),

    #[error(transparent)]
    Core(#[from] chainsentry::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        use chainsentry::Error as E;
        match self {
            CliError::Usage(_) | CliError::Clap(_) => 2,
            CliError::Core(e) => match e {
                E::Config(_) => 2,
                E::Frame(_) | E::Protocol(_) | E::Timeout { .. } => 4,
                E::Numeric(_) => 5,
                E::Shape(_) | E::Parse { .. } | E::Data(_) | E::ModelFile(_) | E::Io(_) => 3,
            },
        }
    }

    /// Text to print on stderr, if not already reported.
    pub fn message(&self) -> Option<String> {
        match self {
            CliError::Clap(_) => None,
            other => Some(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
