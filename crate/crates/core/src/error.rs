use thiserror::Error;

/// Errors raised by the fracture engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid cells are not square: h_x = {hx}, h_y = {hy}")]
    NonSquareCells { hx: f64, hy: f64 },
    #[error("grid too small: {nx}x{ny} nodes (need at least 3 per axis)")]
    TooSmall { nx: usize, ny: usize },
    #[error("boundary edge `{0}` has no label")]
    UnlabeledEdge(&'static str),
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("damage value {value} at node {node} outside [0, 1]")]
    DamageOutOfRange { node: usize, value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("linear system is singular: no Dirichlet node")]
    SingularSystem,
    #[error("alternate minimization stalled after {iterations} iterations (last relative change {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },
    #[error("step {step}: {source}")]
    StepFailed { step: usize, source: Box<Error> },
    #[error("normal vector is not unit length (|n| = {0})")]
    BadNormal(f64),
    #[error("crack candidate has no segments")]
    EmptyCandidate,
    #[error("velocity field does not vanish on the boundary (node {0})")]
    NonZeroTrace(usize),
    #[error("contour of radius {0} leaves the domain")]
    ContourOutOfDomain(f64),
    #[error("crack tip ({0}, {1}) lies outside the domain")]
    TipOutsideDomain(f64, f64),
    #[error("trace has {0} entries, need at least 3")]
    TraceTooShort(usize),
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed field file: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
