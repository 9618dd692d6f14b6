use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A config or manifest field failed validation. `field` is the dotted
    /// path of the offending field.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient at sample {sample_id}: {detail}")]
    NonFiniteGradient { sample_id: u64, detail: String },

    #[error("client {client} produced non-finite model parameters at round {round}")]
    ClientDiverged { round: usize, client: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Prepend a path segment to a validation error's field, e.g. turning
    /// `rate` into `noise.per_client[0].rate` as errors bubble up.
    pub fn prefix_field(self, prefix: &str) -> Self {
        match self {
            Error::Validation { field, message } => Error::Validation {
                field: format!("{prefix}{field}"),
                message,
            },
            other => other,
        }
    }
}
