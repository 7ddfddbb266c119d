use faer::c64;
use thiserror::Error;

use crate::krein::KreinSignature;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid signature ({n_forward} forward, {n_backward} backward): dimension must be at least 1")]
    InvalidSignature { n_forward: usize, n_backward: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch {
        left: KreinSignature,
        right: KreinSignature,
    },

    #[error("backward block T^BB is singular (condition {condition:.3e} exceeds cap {cap:.3e})")]
    SingularBackwardBlock { condition: f64, cap: f64 },

    #[error("operator is not pseudounitary (residual {residual:.3e} > tolerance {tolerance:.3e})")]
    NotPseudounitary { residual: f64, tolerance: f64 },

    #[error("operator is not pseudo-Hermitian (residual {residual:.3e} > tolerance {tolerance:.3e})")]
    NotPseudoHermitian { residual: f64, tolerance: f64 },

    #[error("input state is zero and cannot be normalized")]
    ZeroInput,

    #[error("invalid time interval [{t_minus}, {t_plus}]")]
    InvalidInterval { t_minus: f64, t_plus: f64 },

    #[error("time {time} lies outside the Hamiltonian's interval [{start}, {end}]")]
    OutsideInterval { time: f64, start: f64, end: f64 },

    #[error("integration did not converge after {steps} steps (last change {change:.3e})")]
    IntegrationFailure { steps: usize, change: f64 },

    #[error("eta-norm drift {drift:.3e} exceeds bound {bound:.3e}")]
    NormDrift { drift: f64, bound: f64 },

    #[error("commutator [Z, H(t)] = {residual:.3e} at t = {time} exceeds tolerance")]
    CommutatorViolation { time: f64, residual: f64 },

    #[error("ghost state: real eigenvalue {energy} has eigenvector eta-norm {eta_norm:.3e}")]
    GhostState { energy: f64, eta_norm: f64 },

    #[error("Hamiltonian is not diagonalizable near eigenvalue {eigenvalue}")]
    NonDiagonalizable { eigenvalue: c64 },

    #[error("closed eigenvalue {eigenvalue} has no complex-conjugate partner")]
    UnpairedClosedEigenvalue { eigenvalue: c64 },

    #[error("canonical form check failed (residual {residual:.3e})")]
    CanonicalForm { residual: f64 },

    #[error("eps = {eps} must be positive and below half the gap to the nonreal spectrum ({limit})")]
    EpsilonTooLarge { eps: f64, limit: f64 },

    #[error("resolvent I - G H1 is singular at E = {energy} (condition {condition:.3e})")]
    SingularResolvent { energy: f64, condition: f64 },

    #[error("Neumann series did not converge in {iterations} iterations (spectral radius {spectral_radius:.4})")]
    NonConvergent {
        iterations: usize,
        spectral_radius: f64,
    },

    #[error("no open channel at E = {energy}")]
    NoOpenChannelAtE { energy: f64 },

    #[error("unknown channel {0}")]
    UnknownChannel(String),

    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("{what} is outside its domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("closed form requires D < 0, got D = {discriminant}")]
    ClosedFormInvalid { discriminant: f64 },

    #[error("grid has {points} usable points, at least {required} needed")]
    InsufficientGrid { points: usize, required: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("model file: {0}")]
    Model(String),
}

impl Error {
    /// Stable variant name, used by the CLI when surfacing numerical failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidSignature { .. } => "InvalidSignature",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SignatureMismatch { .. } => "SignatureMismatch",
            Error::SingularBackwardBlock { .. } => "SingularBackwardBlock",
            Error::NotPseudounitary { .. } => "NotPseudounitary",
            Error::NotPseudoHermitian { .. } => "NotPseudoHermitian",
            Error::ZeroInput => "ZeroInput",
            Error::InvalidInterval { .. } => "InvalidInterval",
            Error::OutsideInterval { .. } => "OutsideInterval",
            Error::IntegrationFailure { .. } => "IntegrationFailure",
            Error::NormDrift { .. } => "NormDrift",
            Error::CommutatorViolation { .. } => "CommutatorViolation",
            Error::GhostState { .. } => "GhostState",
            Error::NonDiagonalizable { .. } => "NonDiagonalizable",
            Error::UnpairedClosedEigenvalue { .. } => "UnpairedClosedEigenvalue",
            Error::CanonicalForm { .. } => "CanonicalForm",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::SingularResolvent { .. } => "SingularResolvent",
            Error::NonConvergent { .. } => "NonConvergent",
            Error::NoOpenChannelAtE { .. } => "NoOpenChannelAtE",
            Error::UnknownChannel(_) => "UnknownChannel",
            Error::InvalidTransition(_) => "InvalidTransition",
            Error::Domain { .. } => "DomainError",
            Error::ClosedFormInvalid { .. } => "ClosedFormInvalid",
            Error::InsufficientGrid { .. } => "InsufficientGrid",
            Error::Eigensolver(_) => "Eigensolver",
            Error::Model(_) => "ModelFile",
        }
    }
}
