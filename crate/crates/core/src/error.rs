use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the numerical routines, the file formats and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("input contains non-finite values")]
    NonFinite,

    /// An eigenvalue fell below the round-off band `-1e-10 * lambda_max`.
    #[error("matrix is not positive semi-definite (eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e})")]
    Indefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("symmetric eigensolver did not converge (dim {dim}, condition estimate {condition_estimate:e})")]
    EigenNoConvergence { dim: usize, condition_estimate: f64 },

    #[error("zero-rank covariance")]
    ZeroRank,

    #[error("log of near-singular matrix (eigenvalue {min_eigenvalue:e} below floor {floor:e})")]
    NearSingular { min_eigenvalue: f64, floor: f64 },

    #[error("input {index} is singular; enable the pseudo-inverse fallback to accept it")]
    SingularInput { index: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("sample matrix must have at least one row and one column")]
    EmptySamples,

    #[error("at least one input is required")]
    NoInputs,

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),

    #[error("tensor payload contains non-finite values")]
    NonFiniteTensor,

    #[error("unsupported tensor dims {0:?}")]
    UnsupportedShape(Vec<u32>),

    #[error("feature shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported image format: {0}")]
    UnsupportedImage(String),

    #[error("image decode failure: {0}")]
    ImageDecode(String),

    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("codec has {levels} level(s), level {level} requested")]
    CodecLevel { level: usize, levels: usize },

    #[error("bridge command failed at level {level}: {reason}")]
    BridgeCommand { level: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
