use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator does not commute with conjugation (residual {residual:.3e})")]
    NotConjugationInvariant { residual: f64 },

    #[error("operator is not a gamma-isometry (residual {residual:.3e})")]
    NotGammaIsometry { residual: f64 },

    #[error("matrix is not injective (smallest singular value {smallest:.3e})")]
    NotInjective { smallest: f64 },

    #[error("P11 block is not invertible (smallest singular value {smallest:.3e})")]
    P11NotInvertible { smallest: f64 },

    #[error("not a basis projection: {check} residual {residual:.3e}")]
    NotBasisProjection { check: &'static str, residual: f64 },

    #[error("disk point is not complex-symmetric (residual {residual:.3e})")]
    NotSymmetric { residual: f64 },

    #[error("disk point norm {norm} is not below 1")]
    OutsideDisk { norm: f64 },

    #[error("numerically singular: {0}")]
    NumericallySingular(String),

    #[error("gamma is degenerate on the kernel of the gamma-adjoint (smallest |eigenvalue| {smallest:.3e})")]
    DegenerateGamma { smallest: f64 },

    #[error("operator is not an automorphism (index {index})")]
    NotAutomorphism { index: i64 },

    #[error("disk point norm {norm} exceeds 1; fall back to the canonical Z_V")]
    NormExceeded { norm: f64 },

    #[error("Z does not solve Z V11 = V21 (residual {residual:.3e})")]
    ZNotCompatible { residual: f64 },

    #[error("invalid Z': {0}")]
    InvalidZprime(String),

    #[error("quadratic Hamiltonian invalid: {0}")]
    InvalidHamiltonian(String),

    #[error("vector is not real, f != f* (residual {residual:.3e})")]
    NotReal { residual: f64 },

    #[error("mode index {mode} out of range for {modes} modes (indices are zero-based)")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("particle number {requested} exceeds cutoff {cutoff}")]
    CutoffExceeded { requested: usize, cutoff: usize },

    #[error("multi-index invalid: {0}")]
    InvalidMultiIndex(String),

    #[error("z norm bound {0} outside [0, 1)")]
    InvalidBound(f64),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable variant name, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "Shape",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotConjugationInvariant { .. } => "NotConjugationInvariant",
            Error::NotGammaIsometry { .. } => "NotGammaIsometry",
            Error::NotInjective { .. } => "NotInjective",
            Error::P11NotInvertible { .. } => "P11NotInvertible",
            Error::NotBasisProjection { .. } => "NotBasisProjection",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::OutsideDisk { .. } => "OutsideDisk",
            Error::NumericallySingular(_) => "NumericallySingular",
            Error::DegenerateGamma { .. } => "DegenerateGamma",
            Error::NotAutomorphism { .. } => "NotAutomorphism",
            Error::NormExceeded { .. } => "NormExceeded",
            Error::ZNotCompatible { .. } => "ZNotCompatible",
            Error::InvalidZprime(_) => "InvalidZprime",
            Error::InvalidHamiltonian(_) => "InvalidHamiltonian",
            Error::NotReal { .. } => "NotReal",
            Error::ModeOutOfRange { .. } => "ModeOutOfRange",
            Error::CutoffExceeded { .. } => "CutoffExceeded",
            Error::InvalidMultiIndex(_) => "InvalidMultiIndex",
            Error::InvalidBound(_) => "InvalidBound",
            Error::UnknownFixture(_) => "UnknownFixture",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
