use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// A single violated model invariant.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("DimensionMismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error(
        "SpanViolation: component {component} has random time exponent {exponent} but no pure-time term t^{exponent} in its fixed basis"
    )]
    SpanViolation { component: usize, exponent: u32 },
    #[error("NotPositiveDefinite: {what} (smallest eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e})")]
    NotPositiveDefinite {
        what: String,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },
    #[error("BadTimePlan: {0}")]
    BadTimePlan(String),
    #[error("BadSystemOrder: s = {s} must lie in [1, {r}]")]
    BadSystemOrder { s: usize, r: usize },
    #[error("BadAlpha: alpha = {0} must lie in (0, 1)")]
    BadAlpha(f64),
    #[error("BadRegion: {0}")]
    BadRegion(String),
    #[error("NonFinite: {0}")]
    NonFinite(String),
    #[error("EmptyModel: at least one component is required")]
    EmptyModel,
}

/// Every violation found while validating a [`crate::ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl ValidationErrors {
    pub fn iter(&self) -> core::slice::Iter<'_, ValidationError> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationErrors {}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Validation(ValidationErrors),
    #[error("DimensionMismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("NonPositiveVariance: path variance of component {component} is {value:e} at t = {t}")]
    NonPositiveVariance {
        component: usize,
        t: f64,
        value: f64,
    },
    #[error(
        "QuantileUnattainable: F_T reaches only {reached} at t_max = {t_max} < alpha = {alpha}"
    )]
    QuantileUnattainable {
        alpha: f64,
        reached: f64,
        t_max: f64,
    },
    #[error("SingularInformation: information block of component {component} has condition number {condition:e}")]
    SingularInformation { component: usize, condition: f64 },
    #[error("Infeasible: the uniform design on the candidates is singular ({0})")]
    Infeasible(String),
    #[error("PreconditionNotMet: {0}")]
    PreconditionNotMet(&'static str),
    #[error("InvalidDesign: {0}")]
    InvalidDesign(String),
    #[error("GridTooLarge: {size} points exceed the cap of {cap}")]
    GridTooLarge { size: usize, cap: usize },
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("EmptySupport: every design weight fell below the threshold {0}")]
    EmptySupport(f64),
    #[error("InvalidSweep: {0}")]
    InvalidSweep(String),
}

impl From<ValidationErrors> for Error {
    fn from(e: ValidationErrors) -> Self {
        Error::Validation(e)
    }
}
