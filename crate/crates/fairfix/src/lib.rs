//! File formats, reporting, and the command-line pipeline around
//! [`fairfix_core`].

pub mod cli;
pub mod csv_io;
pub mod model_io;
pub mod report;
pub mod synth;

pub use fairfix_core as core;

/// Errors raised by the IO layer.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Format { path: String, detail: String },
    #[error("{path}: row {row}, column '{column}': {detail}")]
    Cell {
        path: String,
        row: usize,
        column: String,
        detail: String,
    },
    #[error(transparent)]
    Core(#[from] fairfix_core::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;
