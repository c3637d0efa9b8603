use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("boundary of an empty site set is undefined")]
    EmptySiteSet,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("configuration shapes overlap at {0}")]
    OverlappingShapes(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("boundary configuration is not admissible for the given volume")]
    NotAdmissible,

    #[error("dimension {0} is not supported by the strip transfer engine (only d = 2)")]
    UnsupportedDimension(usize),

    #[error("enumeration of {requested} configurations exceeds the cap of {cap}")]
    EnumerationCap { requested: f64, cap: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model file error: {0}")]
    Parse(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
