use thiserror::Error;

/// Errors produced by the filtering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("scale {scale} gives non-integer tap offsets; use an interpolating path (localization mask or adaptive filter)")]
    NonIntegerOffset { scale: f64 },

    #[error("unsupported spline degree {degree} (supported: {supported})")]
    UnsupportedDegree { degree: u32, supported: &'static str },

    #[error("scale {scale} at angle {angle} rad is not a lattice step")]
    IncompatibleScale { scale: f64, angle: f64 },

    #[error("covariance not representable with four directions: |Cxy| = {cxy} exceeds the maximum {max_abs_cxy}")]
    Infeasible { cxy: f64, max_abs_cxy: f64 },

    #[error("covariance is degenerate or not positive definite")]
    DegenerateCovariance,

    #[error("cell budget exceeded: {requested} cells requested, budget is {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("sample ({x}, {y}) lies outside the pre-integrated domain")]
    OutOfDomain { x: i64, y: i64 },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("scale component {value} is below the minimum {min} or not finite")]
    InvalidScale { value: f64, min: f64 },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("scale map format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
