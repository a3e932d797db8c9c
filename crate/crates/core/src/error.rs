use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("a graph patch or halfspace cap encloses no finite volume")]
    PatchHasNoVolume,
    #[error("center {0:?} is not interior to the domain")]
    CenterNotInterior(Vec<f64>),
    #[error("evaluation point coincides with the singularity (distance {0:e})")]
    SingularPoint(f64),
    #[error("integrand returned a non-finite value at {0:?}")]
    NonFiniteIntegrand(Vec<f64>),
    #[error("extrapolation needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("parameter samples must be strictly decreasing towards zero")]
    UnorderedSamples,
    #[error("alpha {0:?} is not exterior to the closure of the domain")]
    AlphaNotExterior(Vec<f64>),
    #[error("point {0:?} is not in the touching set")]
    NoTouchingPoint(Vec<f64>),
    #[error("operation requires a closed boundary")]
    NotClosed,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("mesh file: {0}")]
    MeshFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
