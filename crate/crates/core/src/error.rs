use thiserror::Error;

/// Errors raised by mesh construction, element kernels and the global solve.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh parse error: {0}")]
    Parse(String),

    #[error("mesh validation error in cell {cell}: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("mesh validation error: {0}")]
    InvalidMesh(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("edge {edge}: singular trace interpolation matrix")]
    SingularTrace { edge: usize },

    #[error("unisolvence failure: rank(D) = {rank}, expected {expected}")]
    Unisolvence { rank: usize, expected: usize },

    #[error("projector inconsistency: {0}")]
    Projector(String),

    #[error("cell {cell}: {source}")]
    Element {
        cell: usize,
        #[source]
        source: Box<VemError>,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl VemError {
    pub(crate) fn in_cell(self, cell: usize) -> Self {
        VemError::Element {
            cell,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, VemError>;
