use thiserror::Error;

/// Errors raised by the divergence, bound and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution has empty support")]
    EmptySupport,

    #[error("negative mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("total mass {sum} is outside [1 - 1e-6, 1 + 1e-6]")]
    MassTooFar { sum: f64 },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("duplicate support label {0:?}")]
    DuplicateLabel(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("distributions do not share a support")]
    SupportMismatch,

    #[error("at least one sample is required")]
    ZeroSamples,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("test function value {value} at index {index} is outside {domain}")]
    PhiDomain {
        index: usize,
        value: f64,
        domain: String,
    },

    #[error("loss model does not satisfy the declared loss class: {0}")]
    ModelMismatch(String),

    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    #[error(
        "Lipschitz certificate {declared} violated: |f(x)-f(y)|/|x-y| = {observed} at x={x}, y={y}"
    )]
    LipschitzViolation {
        declared: f64,
        observed: f64,
        x: f64,
        y: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn bad_param(msg: impl Into<String>) -> Error {
    Error::BadParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
