use std::path::PathBuf;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate diagonal entry {value} at row {row}")]
    DegenerateDiagonal { row: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("projection metric is not symmetric positive definite (a11={a11}, a12={a12}, a22={a22})")]
    NonSPDMetric { a11: f64, a12: f64, a22: f64 },

    #[error("time step too large: nodal metric at node {node} is not positive definite (a12^2 = {a12_sq:e} >= a11*a22 = {det_part:e})")]
    TimeStepTooLarge { node: usize, a12_sq: f64, det_part: f64 },

    #[error("Gauss-Seidel iteration did not converge in {sweeps} sweeps (last update {last_update:e}, d4 residual {residual:e})")]
    NoConvergence { sweeps: usize, last_update: f64, residual: f64 },

    #[error("field has no dominant mode (constant field)")]
    NoDominantMode,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config file not found: {0}")]
    MissingFile(PathBuf),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidMesh(_)
            | Error::InvalidParams(_)
            | Error::MissingFile(_)
            | Error::UnknownKey(_)
            | Error::ParseError { .. } => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
