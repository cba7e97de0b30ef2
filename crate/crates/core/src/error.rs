use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two operands whose shapes do not agree.
    #[error("{op}: shape mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A layer whose input does not fit its weights.
    #[error("layer {layer}: {detail}")]
    Layer { layer: usize, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported pairing: {activation} output with {loss} loss")]
    UnsupportedPairing {
        activation: &'static str,
        loss: &'static str,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Malformed dataset bytes; `offset` points at the first offending byte.
    #[error("{file}: {detail} (byte offset {offset})")]
    Format {
        file: String,
        offset: u64,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
