//! Error type shared across the crate.

use crate::rmatrix::Domain;

/// Errors produced by rational-matrix arithmetic, verification and synthesis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: Domain, got: Domain },

    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("matrix is singular as a rational matrix")]
    SingularMatrix,

    #[error("ill-posed interconnection: I - GK is singular")]
    IllPosed,

    #[error("plant must be strictly proper for a well-posed feedback loop: {0}")]
    ImproperPlant(String),

    #[error("controller must be proper")]
    ImproperController,

    #[error("transfer matrix must be proper and stable: {0}")]
    UnstableParameter(String),

    #[error("closed-loop quadruple fails affine-subspace membership (max residual {residual:.3e}, tol {tol:.3e})")]
    MembershipFailed { residual: f64, tol: f64 },

    #[error(
        "infeasible at truncation order {order}: least-squares residual {residual:.3e} exceeds \
         {threshold:.3e}; raising the order enlarges the feasible set"
    )]
    InfeasibleAtOrder {
        order: usize,
        residual: f64,
        threshold: f64,
    },

    #[error("H2 norm is infinite: {0}")]
    InfiniteH2Norm(String),

    #[error("synthesized result failed post-hoc verification: {0}")]
    VerificationFailed(String),

    #[error("unsupported objective: {0}")]
    UnsupportedObjective(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
