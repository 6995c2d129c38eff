use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),

    #[error("non-triangle face at line {line} ({arity} vertices)")]
    NonTriangleFace { line: usize, arity: usize },

    #[error("face {face} references vertex {vertex}, mesh has {count} vertices")]
    VertexOutOfRange { face: usize, vertex: usize, count: usize },

    #[error("face {0} is degenerate (repeated vertex)")]
    DegenerateFace(usize),

    #[error("face {0} has zero area")]
    ZeroAreaFace(usize),

    #[error("non-manifold edge ({0}, {1}) has more than two adjacent faces")]
    NonManifoldEdge(usize, usize),

    #[error("mesh has zero total area")]
    ZeroArea,

    #[error("mesh is disconnected: vertex {0} is unreachable")]
    Disconnected(usize),

    #[error("invalid vertex index {index} (mesh has {count} vertices)")]
    InvalidVertex { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid basis size k={k} for mesh with {n} vertices")]
    InvalidBasisSize { k: usize, n: usize },

    #[error("eigen solver failed: {0}")]
    EigenSolver(String),

    #[error("non-positive eigenvalue {value} at index {index}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("insufficient features: only {0} landmarks detected")]
    InsufficientFeatures(usize),

    #[error("empty landmark match")]
    EmptyMatch,

    #[error("ill-conditioned functional map system (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("cannot seed chromosomes: no prominent landmark")]
    NoProminentLandmark,

    #[error("no admissible chromosomes after {0} attempts")]
    NoAdmissibleChromosomes(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {what}: {message}")]
    Malformed { what: &'static str, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
