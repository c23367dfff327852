use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CosegError>;

#[derive(Debug, Error)]
pub enum CosegError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("degenerate geometry: face {face} has area {area:e} (minimum {min_area:e})")]
    DegenerateGeometry {
        face: usize,
        area: f64,
        min_area: f64,
    },
    #[error("face {face} references vertex {index} but the mesh has {n_vertices} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        n_vertices: usize,
    },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("vertex {0} has no incident face")]
    IsolatedVertex(usize),
    #[error("label {0} has no palette entry")]
    MissingPaletteEntry(i64),
    #[error("vertex {vertex} has an empty truncated kernel row; increase h_factor (currently h = {h:e})")]
    EmptyKernelRow { vertex: usize, h: f64 },
    #[error("eigensolver did not converge: worst residual {worst_residual:e} after Krylov dimension {krylov_dim}")]
    ConvergenceFailure {
        worst_residual: f64,
        krylov_dim: usize,
    },
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("requested {k} eigenpairs but the mesh has only {n} vertices (need k < n)")]
    KTooLarge { k: usize, n: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("basis mismatch: expected {expected}, got {got}")]
    BasisMismatch { expected: String, got: String },
    #[error("mesh is disconnected (λ2 = {lambda2:e}); split it into connected components first")]
    DisconnectedMesh { lambda2: f64 },
    #[error("{points} points cannot form {clusters} clusters")]
    TooFewPoints { points: usize, clusters: usize },
    #[error("descriptor configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error(
        "singular least-squares system: constraint matrix has rank {rank} < {k}; use ridge > 0"
    )]
    SingularSystem { rank: usize, k: usize },
    #[error("empty shape set")]
    EmptySet,
    #[error("part {0} is empty")]
    EmptyPart(usize),
    #[error("no functional map for shape {0}")]
    MissingMap(String),
    #[error("{parts} parts cannot be grouped into {labels} labels")]
    TooFewParts { parts: usize, labels: usize },
    #[error("label file has {got} entries; mesh has {n_vertices} vertices and {n_faces} faces")]
    CountMismatch {
        got: usize,
        n_vertices: usize,
        n_faces: usize,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("basis cache: {0}")]
    Cache(String),
    #[error("shape {shape}: {source}")]
    Shape {
        shape: String,
        #[source]
        source: Box<CosegError>,
    },
}

/// Coarse classification used by the command line for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
}

impl CosegError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CosegError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            CosegError::Validation(_) => ErrorKind::Validation,
            CosegError::Shape { source, .. } => source.kind(),
            _ => ErrorKind::Runtime,
        }
    }

    /// Attach the failing shape's name.
    pub fn in_shape(self, shape: &str) -> Self {
        CosegError::Shape {
            shape: shape.to_string(),
            source: Box::new(self),
        }
    }
}
