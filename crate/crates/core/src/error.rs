//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("mesh is empty (no triangles)")]
    EmptyMesh,

    #[error("mesh contains only degenerate triangles")]
    AllDegenerate,

    #[error("fewer than 4 points ({0}) for tetrahedralization")]
    TooFewPoints(usize),

    #[error("all points are coplanar; no 3D tetrahedralization exists")]
    CoplanarPoints,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("octree refinement hit the depth cap ({0} levels)")]
    DepthCap(u32),

    #[error("gradient limiting failed to converge after {passes} passes (worst residual {residual:.3e})")]
    LimiterDiverged { passes: usize, residual: f64 },

    #[error("size field file {path}: {message}")]
    FieldFile { path: PathBuf, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn field_file(path: impl Into<PathBuf>, message: impl Into<String>) -> Error {
        Error::FieldFile {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Attach the pipeline stage that produced this error.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The underlying error, unwrapping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
