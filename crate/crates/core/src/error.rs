use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A parameter or input violates a stated bound; the message names it.
    Domain(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    GridMismatch,
    /// The CFL-admissible step fell below `dt_min` while the gradient guard
    /// had not fired.
    StepTooSmall {
        time: f64,
        dt: f64,
        max_slope: f64,
    },
    /// The face-averaged Hamiltonian is only monotone below a slope bound.
    SchemeNotMonotone {
        time: f64,
        max_slope: f64,
        bound: f64,
    },
    NonFinite {
        time: f64,
    },
    Regime(String),
    Bracket {
        lo: f64,
        hi: f64,
    },
    NonConvergence {
        what: &'static str,
        iterations: u64,
    },
    OutOfWindow {
        t: f64,
    },
    InsufficientData {
        needed: usize,
        found: usize,
    },
    PreconditionFailed(String),
    Unsupported(String),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::GridMismatch => "GridMismatch",
            Error::StepTooSmall { .. } => "StepTooSmall",
            Error::SchemeNotMonotone { .. } => "SchemeNotMonotone",
            Error::NonFinite { .. } => "NonFinite",
            Error::Regime(_) => "RegimeError",
            Error::Bracket { .. } => "BracketError",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::OutOfWindow { .. } => "OutOfWindow",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::Unsupported(_) => "Unsupported",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::StepTooSmall { time, dt, max_slope } => {
                write!(f, "time step {dt:e} below dt_min at t = {time} (max slope {max_slope:e})")
            }
            Error::SchemeNotMonotone { time, max_slope, bound } => {
                write!(f, "face-averaged Hamiltonian not monotone at t = {time}: slope {max_slope} exceeds {bound}")
            }
            Error::NonFinite { time } => write!(f, "non-finite values at t = {time}"),
            Error::Regime(msg) => write!(f, "regime error: {msg}"),
            Error::Bracket { lo, hi } => {
                write!(f, "center-value bracket [{lo}, {hi}] does not straddle the boundary zero")
            }
            Error::NonConvergence { what, iterations } => {
                write!(f, "{what} did not converge after {iterations} iterations")
            }
            Error::OutOfWindow { t } => write!(f, "barrier evaluated outside its validity window (t = {t})"),
            Error::InsufficientData { needed, found } => {
                write!(f, "insufficient data: need {needed} samples, found {found}")
            }
            Error::PreconditionFailed(msg) => write!(f, "precondition failed: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
