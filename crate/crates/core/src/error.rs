use thiserror::Error;

use crate::generator::Family;
use crate::poly::MultiIndex;
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("parameter `{name}` {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("covariance matrix is not symmetric")]
    NotSymmetric,

    #[error("covariance matrix is not positive semi-definite")]
    NotPositiveSemidefinite,

    #[error("test monomial must have total degree >= 1")]
    DegenerateRoot,

    #[error("descent violation: generator maps {root} to {target}, which is not of strictly lower degree")]
    DescentViolation {
        root: MultiIndex,
        target: MultiIndex,
    },

    #[error("non-ergodic: exit rate of {root} is {exit_rate}, must be positive")]
    NonErgodic {
        root: MultiIndex,
        exit_rate: Rational,
    },

    #[error(
        "unbounded support: derivative bounds are only valid for targets on the unit box, not {0}"
    )]
    UnboundedSupport(Family),

    #[error("order {order} exceeds the limit {limit}")]
    SizeLimit { order: u32, limit: u32 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Feynman-Kac weight exponent k(k-2)t = {exponent} exceeds the cap {cap}")]
    FeynmanKacHorizon { exponent: f64, cap: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors meaning the generator or target lies outside the
    /// method's scope, as opposed to malformed input.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            Error::DescentViolation { .. } | Error::NonErgodic { .. } | Error::UnboundedSupport(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
