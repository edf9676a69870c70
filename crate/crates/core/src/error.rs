use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative order {order} applied to a field with mean {mean:e}")]
    NegativeOrderNonzeroMean { order: f64, mean: f64 },
    #[error("exact Gagliardo sum requested on {points} points (limit {limit})")]
    ExactModeTooLarge { points: usize, limit: usize },
    #[error("ellipticity {eta} is not in (0, {upper}]")]
    BadEllipticity { eta: f64, upper: f64 },
    #[error("measured bi-Lipschitz lower bound {lower:e} below tolerance")]
    DegenerateJacobian { lower: f64 },
    #[error("quadrature for mode {mode:?} did not converge (error {error:e}, value {value:e})")]
    QuadratureNotConverged { mode: Vec<i64>, error: f64, value: f64 },
    #[error("direction set has zero spherical measure")]
    EmptyCone,
    #[error("symbol vanishes at mode {mode:?}")]
    SingularSymbol { mode: Vec<i64> },
    #[error("symbol does not cover mode {mode:?}")]
    IncompleteSymbol { mode: Vec<i64> },
    #[error("ball of radius {radius} around {center:?} leaves the domain")]
    BallTooLarge { center: Vec<f64>, radius: f64 },
    #[error("fixed-point map is not contracting (rates {rates:?})")]
    NoContraction { rates: Vec<f64> },
    #[error("fixed-point iteration stopped after {iterations} steps (last increment {increment:e})")]
    MaxIter { iterations: usize, increment: f64 },
    #[error("regularity ladder cannot advance from order {order} (exponent {exponent})")]
    LadderStalled { order: f64, exponent: f64 },
    #[error("shift {shift:?} is not a multiple of the grid spacing")]
    OffGridShift { shift: Vec<f64> },
    #[error("gradient magnitude {magnitude:e} below floor {floor:e}")]
    DegenerateGradient { magnitude: f64, floor: f64 },
    #[error("field is not a subsolution (defect {defect:e} on probe {probe})")]
    NotSubsolution { defect: f64, probe: usize },
    #[error("truncation level b = {b} must exceed 1")]
    BadTruncation { b: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io: {0}")]
    Io(String),
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
