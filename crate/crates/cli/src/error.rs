use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] ncentre::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
