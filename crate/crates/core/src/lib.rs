//! Spectral numerics for a conformally invariant quadratic form on the
//! n-sphere in the supercritical range `s > n/2`, where the Sobolev exponent
//! is negative. The crate evaluates the form on zonal functions, reproduces
//! the sharp constant and its equality family, checks conformal invariance
//! and second-variation instability, certifies the divergent-integral test
//! functions, and searches numerically for minimizers of the conformal
//! quotient.

pub mod functional;
pub mod gegenbauer;
pub mod optimizer;
pub mod special;
pub mod verify;
pub mod zonal;

pub use functional::{ExtReal, FunctionalReport};
pub use gegenbauer::{GegenbauerCoeffs, QuadratureRule};
pub use special::{Regime, SignedLogValue, SpectralParams};
pub use zonal::{ConformalDilation, ZonalFunction};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("gamma pole at argument {0}")]
    GammaPole(f64),
    #[error("numerator pole at argument {0}")]
    NumeratorPole(f64),
    #[error("indeterminate ratio: both Gamma({a}) and Gamma({b}) have poles")]
    IndeterminateRatio { a: f64, b: f64 },
    #[error("quadrature node solver failed to converge: {0}")]
    QuadratureNoConvergence(String),
    #[error("non-finite profile sample at t = {t}")]
    NonFiniteSample { t: f64 },
    #[error("profile not nonnegative: u({t}) = {value}")]
    ProfileNotNonnegative { t: f64, value: f64 },
    #[error("degree {ell} exceeds truncation L_max = {l_max}")]
    DegreeOutOfRange { ell: u32, l_max: u32 },
    #[error("insufficient band limit: truncation residual {residual:.3e} exceeds bound {bound:.3e}")]
    InsufficientBandLimit { residual: f64, bound: f64 },
    #[error("K incompatible with (n, s): {0}")]
    RegimeMismatch(String),
    #[error("invalid profile data: {0}")]
    InvalidProfileData(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
