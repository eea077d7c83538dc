// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::fixed_point::FxFormat;

pub type Result<T> = std::result::Result<T, DfcError>;

#[derive(Debug, Error)]
pub enum DfcError {
    #[error("fixed-point overflow in {op}")]
    Overflow { op: &'static str },

    #[error("fixed-point format mismatch: {lhs} vs {rhs}")]
    FormatMismatch { lhs: FxFormat, rhs: FxFormat },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("duplicate or non-increasing interpolation node at position {index}")]
    DuplicateNode { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid scenario: {0}")]
    Schedule(String),

    #[error("malformed data at row {row}: {msg}")]
    Format { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DfcError {
    pub(crate) fn out_of_range(what: &'static str, value: impl ToString) -> Self {
        DfcError::OutOfRange {
            what,
            value: value.to_string(),
        }
    }
}
