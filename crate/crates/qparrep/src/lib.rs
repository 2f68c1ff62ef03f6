//! Numerical laboratory for quantum interactive protocols.
//!
//! This crate implements the (2r+1)-message challenger/adversary game model
//! with dense complex linear algebra, and on top of it:
//!
//! - k-fold parallel repetition and the prefix-game operators used to analyze
//!   entangled multi-fold cheating strategies ([`protocol`]);
//! - Jordan's two-projector decomposition, alternating projective
//!   measurements, and the almost-projective measurement built from them
//!   ([`jordan`], [`altmeas`]);
//! - singular-value amplification with an exact spectral oracle and a
//!   certified bounded-polynomial mode ([`svt`]);
//! - the extraction adversaries that convert a k-fold cheating strategy into
//!   a single-fold one, in both non-uniform (advice given) and uniform
//!   (advice reconstructed by measurement) settings ([`reduction`]);
//! - round halving and public-coin compilation for quantum arguments
//!   ([`compression`]);
//! - canonical quantum commitments, flavor switching, XOR repetition, quantum
//!   predicates, quantum money games, the forwarding counterexample, and the
//!   black-hole radiation commitment ([`applications`]);
//! - seeded, reproducible experiment drivers behind the `qparrep` binary
//!   ([`experiments`]).
//!
//! Start with the `examples/` directory: each runnable example demonstrates
//! one capability end to end.

pub mod altmeas;
pub mod applications;
pub mod compression;
pub mod experiments;
pub mod jordan;
pub mod protocol;
pub mod qops;
pub mod reduction;
pub mod rng;
pub mod svt;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("register label collision: {0}")]
    LabelCollision(String),

    #[error("unknown register label: {0}")]
    UnknownLabel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("operator fails {kind} check (residual {residual:.3e})")]
    KindCheckFailed { kind: &'static str, residual: f64 },

    #[error("total dimension {0} exceeds cap {1}")]
    DimensionCap(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("protocol must have {expected} messages, got {got}")]
    MessageCount { expected: String, got: usize },

    #[error("zero-norm state where a normalizable state is required")]
    ZeroNorm,

    #[error("eigen/singular decomposition failed to converge")]
    DecompositionFailed,

    #[error("polynomial certificate failed: {0}")]
    CertificateFailed(String),

    #[error("simulation step budget exceeded: {0}")]
    SimulationBudget(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default cap on a layout's total dimension. Operations that grow spaces
/// (tensor powers, parallel repetition, XOR repetition) refuse to cross it
/// unless given an explicit larger cap.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Tolerance for eigenvalue/singular-value thresholding and for idempotency,
/// unitarity, and Hermiticity checks. A single documented constant; see the
/// module docs of [`qops`].
pub const SPECTRAL_TOL: f64 = 1e-9;
