//! Error taxonomy shared by every module.
//!
//! Input and precondition problems are reported as distinct variants so the
//! command line can map them to a usage exit code, while invariant breaches
//! (a failed theorem check, an exhausted witness search, a diverging
//! extension) carry enough payload to be dumped as a diagnostic.

use thiserror::Error;

/// One probe of the witness grid: the projection scale, shift, and the two
/// mean norms it produced.
#[derive(Clone, Copy, Debug)]
pub struct WitnessProbe {
    /// Threshold used to pick the spectral projection.
    pub eps: f64,
    /// Identity shift factor `delta` in `X = sP + s·delta·I`.
    pub delta: f64,
    /// Scale `s`.
    pub s: f64,
    /// Norm of the mean against the first matrix.
    pub norm_a: f64,
    /// Norm of the mean against the second matrix.
    pub norm_b: f64,
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix dimension {n} outside supported range [{min}, {max}]")]
    DimensionRange { n: usize, min: usize, max: usize },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("asymmetry defect {defect:.3e} exceeds {bound:.3e}")]
    Asymmetric { defect: f64, bound: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.6e} below -{tol:.3e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("matrix is not positive definite: min eigenvalue {min_eig:.6e} below floor {floor:.3e}")]
    NotPd { min_eig: f64, floor: f64 },

    #[error("matrix is not an orthogonal projection: {reason}")]
    NotProjection { reason: String },

    #[error("eigenvalue {eigenvalue:.12e} within {guard:.1e} of interval endpoint {endpoint:.12e}")]
    BoundaryAmbiguity { eigenvalue: f64, endpoint: f64, guard: f64 },

    #[error("scalar function produced a non-finite value at eigenvalue {eigenvalue:.6e}")]
    FnDomain { eigenvalue: f64 },

    #[error("projection has rank zero")]
    ZeroProjection,

    #[error("invalid representing function '{label}': {reason}")]
    InvalidRepresentingFunction { label: String, reason: String },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure node t = {node:.12e} within splitting tolerance of endpoint {endpoint:.12e}")]
    NodeOnBoundary { node: f64, endpoint: f64 },

    #[error("measure does not reproduce the function: {reason}")]
    MeasureMismatch { reason: String },

    #[error("scalar input {x:.6e} outside the domain (0, \u{221e})")]
    ScalarDomain { x: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("extension sequence not monotone at halving step {step}: increase {increase:.3e}")]
    ExtensionNotMonotone { step: u32, increase: f64 },

    #[error(
        "extension sequence did not converge after {steps} halvings; \
         last successive difference {last_delta:.3e}"
    )]
    ExtensionDiverged { steps: u32, last_delta: f64 },

    #[error(
        "witness search exhausted {table_len} probes without finding a margin above {threshold:.3e}",
        table_len = table.len()
    )]
    WitnessSearchExhausted { threshold: f64, table: Vec<WitnessProbe> },

    #[error("order determination violated: {context}")]
    TheoremViolation { context: String },

    #[error("test element does not commute with the difference: commutator max entry {defect:.3e}")]
    NotInAlgebra { defect: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a mathematical invariant, as opposed to bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::TheoremViolation { .. }
                | Error::WitnessSearchExhausted { .. }
                | Error::ExtensionNotMonotone { .. }
                | Error::ExtensionDiverged { .. }
                | Error::MeasureMismatch { .. }
        )
    }
}
