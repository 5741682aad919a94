use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: parameters, state, configuration or scenario text.
    Validation,
    /// Input is valid but the requested quantity does not exist for it.
    Domain,
    /// A numerical procedure failed (integration, Newton, eigen solve).
    Numeric,
    /// Reading or writing a sink failed.
    Io,
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Validation => "validation",
            ErrorClass::Domain => "domain",
            ErrorClass::Numeric => "numeric",
            ErrorClass::Io => "io",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter {
        name: &'static str,
        constraint: String,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid integration config: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in state component {component}")]
    NonFinite { component: &'static str },

    #[error("R0 undefined: M = {m:e} <= 0, only the trivial disease-free equilibrium exists")]
    R0Undefined { m: f64 },

    #[error("BRDFE does not exist: M = {m:e} <= 0")]
    BrdfeUndefined { m: f64 },

    #[error(
        "positivity violation: {component} = {value:e} at t = {t} (step {step:e}), \
         below tolerance -{tolerance:e}"
    )]
    PositivityViolation {
        component: &'static str,
        value: f64,
        t: f64,
        step: f64,
        tolerance: f64,
    },

    #[error("step size underflow at t = {t}: h = {step:e} < {min_step:e} (problem looks stiff)")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },

    #[error("Newton did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: [f64; 8],
    },

    #[error("Newton iteration collapsed to a disease-free root")]
    CollapsedToDfe { last_iterate: [f64; 8] },

    #[error("singular Jacobian in Newton step")]
    SingularJacobian,

    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    #[error(
        "stability verdict {verdict} disagrees with R0 = {r0} (expected {expected}); \
         internal consistency error"
    )]
    StabilityMismatch {
        verdict: &'static str,
        expected: &'static str,
        r0: f64,
    },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("scenario key `{key}`: {constraint}")]
    ScenarioValue { key: String, constraint: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidState(_)
            | Error::InvalidConfig(_)
            | Error::NonFinite { .. }
            | Error::Syntax { .. }
            | Error::ScenarioValue { .. } => ErrorClass::Validation,
            Error::R0Undefined { .. } | Error::BrdfeUndefined { .. } => ErrorClass::Domain,
            Error::PositivityViolation { .. }
            | Error::StepUnderflow { .. }
            | Error::NoConvergence { .. }
            | Error::CollapsedToDfe { .. }
            | Error::SingularJacobian
            | Error::EigenFailure
            | Error::StabilityMismatch { .. } => ErrorClass::Numeric,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}
