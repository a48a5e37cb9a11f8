use thiserror::Error;

use crate::surface::{CornerId, SurfelId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptyInput: the voxel set is empty")]
    EmptyInput,

    #[error("NonManifoldEdge: edgel {a}-{b} is incident to {count} surfels")]
    NonManifoldEdge {
        a: CornerId,
        b: CornerId,
        count: usize,
    },

    #[error("NonManifoldVertex: corner {corner} has {fans} separate surfel fans")]
    NonManifoldVertex { corner: String, fans: usize },

    #[error("InconsistentOrientation: edgel {a}-{b} is traversed in the same direction by both surfels")]
    InconsistentOrientation { a: CornerId, b: CornerId },

    #[error("DegenerateProjection: surfel {surfel} projects to a degenerate quad (size {length:e})")]
    DegenerateProjection { surfel: SurfelId, length: f64 },

    #[error("NonPositiveRealPart: edge {edge} has Re rho = {re:e}")]
    NonPositiveRealPart { edge: String, re: f64 },

    #[error("DimensionError: {op} is undefined on {degree}-cells")]
    DimensionError { op: &'static str, degree: usize },

    #[error("SingularStar: edge {edge} has Re rho = {re:e}")]
    SingularStar { edge: String, re: f64 },

    #[error("NotRealStructure: edge {edge} has Im rho = {im:e}")]
    NotRealStructure { edge: String, im: f64 },

    #[error("DegenerateMove: {0}")]
    DegenerateMove(String),

    #[error("InvalidConfiguration: {0}")]
    InvalidConfiguration(String),

    #[error("SingularSystem: {0}")]
    SingularSystem(String),

    #[error("Underconstrained: {pins} pinned vertices, at least 2 are required")]
    Underconstrained { pins: usize },

    #[error("NotConverged: residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("LengthMismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("Parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("UnknownCell: {0}")]
    UnknownCell(String),

    #[error("MissingCell: {0}")]
    MissingCell(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short variant name, used by the CLI when reporting failures.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::NonManifoldEdge { .. } => "NonManifoldEdge",
            Error::NonManifoldVertex { .. } => "NonManifoldVertex",
            Error::InconsistentOrientation { .. } => "InconsistentOrientation",
            Error::DegenerateProjection { .. } => "DegenerateProjection",
            Error::NonPositiveRealPart { .. } => "NonPositiveRealPart",
            Error::DimensionError { .. } => "DimensionError",
            Error::SingularStar { .. } => "SingularStar",
            Error::NotRealStructure { .. } => "NotRealStructure",
            Error::DegenerateMove(_) => "DegenerateMove",
            Error::InvalidConfiguration(_) => "InvalidConfiguration",
            Error::SingularSystem(_) => "SingularSystem",
            Error::Underconstrained { .. } => "Underconstrained",
            Error::NotConverged { .. } => "NotConverged",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::Parse { .. } => "Parse",
            Error::UnknownCell(_) => "UnknownCell",
            Error::MissingCell(_) => "MissingCell",
            Error::Io(_) => "Io",
        }
    }

    /// Whether the error stems from bad input rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::NotConverged { .. })
    }
}
