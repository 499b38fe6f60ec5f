// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

/// Errors produced anywhere in the reduction pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("entry ({row}, {col}) out of bounds for a {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("non-finite value {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("matrix is singular: pivot {pivot:e} at column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("G22 block is singular near node(s) {nodes:?}: pivot {pivot:e}")]
    SingularG22 { nodes: Vec<String>, pivot: f64 },

    #[error("E is singular (zero-capacitance nodes {nodes:?}); extended Krylov reduction needs a regular or regularized model")]
    SingularE { nodes: Vec<String> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid element {name}: {message}")]
    InvalidElement { name: String, message: String },

    #[error("dense materialization of a {size}x{size} matrix exceeds the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
