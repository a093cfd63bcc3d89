use std::path::PathBuf;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration at AP {ap}: {reason}")]
    InvalidConfiguration { ap: usize, reason: String },

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("config error in {location}: {reason}")]
    Config { location: String, reason: String },

    #[error("seed {seed}: {source}")]
    Seeded {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(location: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Seeded { source, .. } => source.exit_code(),
            Error::Infeasible(_) => 3,
            Error::NumericalDomain(_) => 4,
            _ => 2,
        }
    }

    /// Strips seed context added by the harness.
    pub fn root(&self) -> &Error {
        match self {
            Error::Seeded { source, .. } => source.root(),
            e => e,
        }
    }
}
