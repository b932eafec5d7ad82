use thiserror::Error;

/// Errors raised by every module of the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shift {shift} leaves an empty domain (span {span})")]
    EmptyDomain { shift: f64, span: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("window [{a}, {b}] is outside the signal domain [{lo}, {hi}]")]
    WindowOutOfDomain { a: f64, b: f64, lo: f64, hi: f64 },
    #[error("window of length {len} is shorter than 4x the largest candidate shift {tau_max}")]
    WindowTooShort { len: f64, tau_max: f64 },
    #[error("domain of length {len} is too short: {need} required")]
    DomainTooShort { len: f64, need: f64 },
    #[error("hull member {index} is not almost periodic at eps = {eps}")]
    HullNotAp { index: usize, eps: f64 },
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("right-hand side is not finite at t = {t}")]
    NonFiniteRhs { t: f64 },
    #[error("eps = {eps} must be strictly smaller than delta0 = {delta0}")]
    BadOrder { eps: f64, delta0: f64 },
    #[error("lag {lag} is outside [-{r}, 0] or shorter than one grid step")]
    LagOutOfRange { lag: f64, r: f64 },
    #[error("segment time {t} precedes the first full delay window")]
    SampleBeforeDelay { t: f64 },
    #[error("value left the finite range at t = {t}")]
    NonFiniteValue { t: f64 },
    #[error("root finder did not converge at t = {t} (worst residual {residual:e})")]
    NonConvergence { t: f64, residual: f64 },
    #[error("branch collision on {intervals:?}")]
    BranchCollision { intervals: Vec<(f64, f64)> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
