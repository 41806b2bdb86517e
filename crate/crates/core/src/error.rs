use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {z} lies on the branch cut (-inf, 0]")]
    BranchCutViolation { z: Complex64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate symbol at A={a}, lambda={lambda}: |F|={magnitude:e}")]
    DegenerateSymbol {
        a: f64,
        lambda: Complex64,
        magnitude: f64,
    },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("contour geometry: {0}")]
    GeometryError(String),

    #[error("function vanishes on the boundary near {at} (|f|={magnitude:e})")]
    BoundaryZero { at: Complex64, magnitude: f64 },

    #[error("root iteration did not converge at A={a}; last iterate {iterate}")]
    NoConvergence { a: f64, iterate: Complex64 },

    #[error("root {root} at A={a} left its certified disk")]
    RootEscapedRegion { a: f64, root: Complex64 },

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("decay is not polynomial over the window (log-linear residual {linear:e} vs log-log {loglog:e})")]
    NonPolynomialDecay { linear: f64, loglog: f64 },

    #[error("input is not Hermitian (max defect {max_defect:e})")]
    SymmetryViolation { max_defect: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BranchCutViolation { .. } => "BranchCutViolation",
            Error::InvalidParams(_) => "InvalidParams",
            Error::DegenerateSymbol { .. } => "DegenerateSymbol",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::GeometryError(_) => "GeometryError",
            Error::BoundaryZero { .. } => "BoundaryZero",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::RootEscapedRegion { .. } => "RootEscapedRegion",
            Error::CalibrationFailure(_) => "CalibrationFailure",
            Error::HypothesisViolation(_) => "HypothesisViolation",
            Error::NonPolynomialDecay { .. } => "NonPolynomialDecay",
            Error::SymmetryViolation { .. } => "SymmetryViolation",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
