use thiserror::Error;

/// Errors raised by the solvers and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("step rejected {attempts} times in a row at t = {t}: {reason}")]
    StepRejected { attempts: usize, t: f64, reason: String },
    #[error("step budget of {0} exhausted before the stop rule fired")]
    StepBudget(usize),
    #[error("insufficient coverage: {0}")]
    Coverage(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("target {target} outside achievable range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
