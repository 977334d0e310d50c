use serde_json::{json, Value};
use thiserror::Error;

use crate::hilbert::ModeLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {0} is not a valid encoding mode of the grid")]
    InvalidMode(ModeLabel),

    #[error("states live on different time grids")]
    GridMismatch,

    #[error("element `{element}` routed mode {mode} outside the grid")]
    InvalidRouting { element: String, mode: ModeLabel },

    #[error("outcomes {first} and {second} share the detection bin at {offset_ps} ps")]
    DegenerateRouting {
        first: usize,
        second: usize,
        offset_ps: i64,
    },

    #[error("unsupported dimension {0}: must be a power of two between 2 and 16")]
    UnsupportedDimension(usize),

    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("mode basis grew to {size} modes, above the cap of {cap}")]
    Complexity { size: usize, cap: usize },

    #[error("row {row} has no in-window counts")]
    InsufficientData { row: usize },

    #[error("expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidMode(_) => "invalid_mode",
            Error::GridMismatch => "grid_mismatch",
            Error::InvalidRouting { .. } => "invalid_routing",
            Error::DegenerateRouting { .. } => "degenerate_routing",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Complexity { .. } => "complexity",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Shape { .. } => "shape",
            Error::Domain { .. } => "domain",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub fn context(&self) -> Value {
        match self {
            Error::InvalidMode(m) => json!({ "mode": m }),
            Error::InvalidRouting { element, mode } => json!({ "element": element, "mode": mode }),
            Error::DegenerateRouting {
                first,
                second,
                offset_ps,
            } => json!({ "first": first, "second": second, "offset_ps": offset_ps }),
            Error::UnsupportedDimension(d) => json!({ "dimension": d }),
            Error::IndexOutOfRange { index, dimension } => {
                json!({ "index": index, "dimension": dimension })
            }
            Error::Complexity { size, cap } => json!({ "size": size, "cap": cap }),
            Error::InsufficientData { row } => json!({ "row": row }),
            Error::Shape { expected, actual } => json!({ "expected": expected, "actual": actual }),
            Error::Domain {
                name,
                value,
                domain,
            } => json!({ "name": name, "value": value, "domain": domain }),
            Error::GridMismatch | Error::Config(_) | Error::Io(_) => json!({}),
        }
    }

    /// `{code, message, context}` document.
    pub fn to_json(&self) -> Value {
        json!({
            "code": self.code(),
            "message": self.to_string(),
            "context": self.context(),
        })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
