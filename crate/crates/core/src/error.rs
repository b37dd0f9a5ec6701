use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("radius {0} outside [0, 1]")]
    RadiusOutOfRange(f64),

    #[error("derivative of order {0} is not available for this law")]
    UnsupportedOrder(u8),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size underflow at r = {r}")]
    StepUnderflow { r: f64 },

    #[error("non-finite state at r = {r}")]
    NonFinite { r: f64 },

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("profile is degenerate (n = 1 identically, d(k) vanishes)")]
    Degenerate,

    #[error("|Im k| too large for an unscaled value at k = {0}; use the scaled evaluation")]
    Overflow(String),

    #[error("contour passes through a zero of d: {0}")]
    ContourThroughZero(String),

    #[error("found {found} zeros, at least {needed} required")]
    InsufficientZeros { found: usize, needed: usize },

    #[error("no Kronecker approximation found for t up to {t_cap}")]
    KroneckerNotFound { t_cap: f64 },

    #[error("sign partition not resolvable at grid {grid}: {changes} sign changes")]
    Unresolvable { grid: usize, changes: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
