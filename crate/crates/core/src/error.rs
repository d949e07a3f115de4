use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Z = {z} is at or beyond the exceptional point Z* = {z_star}; the spectrum is no longer real")]
    ExceptionalPoint { z: f64, z_star: f64 },

    #[error("x = {x} lies outside the well [-1, 1]")]
    Domain { x: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("metric eigenvalue {value:e} at position {index} is not positive")]
    MetricNotPositive { index: usize, value: f64 },

    #[error("eigenvector labeling is ambiguous between basis indices {first} and {second}")]
    AmbiguousLabeling { first: usize, second: usize },

    #[error("no root of the level equation found for n = {n} at Z = {z}")]
    RootNotFound { n: usize, z: f64 },

    #[error("closed-form overlap <{m}|{n}> disagrees with quadrature by {diff:e}")]
    ClosedFormMismatch { m: usize, n: usize, diff: f64 },

    #[error("series truncated at ell_max = {ell_max} is too coarse: {detail}")]
    TruncationTooCoarse { ell_max: usize, detail: String },

    #[error("tail sum not converged within {tail} basis states (last block contributed {last:e})")]
    TailNotConverged { tail: usize, last: f64 },

    #[error("wave function is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("level {j} lies outside the truncation order N = {order}")]
    OutOfTruncation { j: usize, order: usize },

    #[error("expectation value has imaginary residue {residue:e}")]
    HermiticityViolation { residue: f64 },
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::ExceptionalPoint { .. }
                | Error::Domain { .. }
                | Error::OutOfTruncation { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ExceptionalPoint { .. } => "ExceptionalPoint",
            Error::Domain { .. } => "Domain",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::MetricNotPositive { .. } => "MetricNotPositive",
            Error::AmbiguousLabeling { .. } => "AmbiguousLabeling",
            Error::RootNotFound { .. } => "RootNotFound",
            Error::ClosedFormMismatch { .. } => "ClosedFormMismatch",
            Error::TruncationTooCoarse { .. } => "TruncationTooCoarse",
            Error::TailNotConverged { .. } => "TailNotConverged",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::OutOfTruncation { .. } => "OutOfTruncation",
            Error::HermiticityViolation { .. } => "HermiticityViolation",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
