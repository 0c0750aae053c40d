use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("grid mismatch: expected M = {expected}, got M = {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("zero suspected on the search box boundary near {re} + {im}i; shift the box")]
    BoundaryZero { re: f64, im: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("step size underflow at x = {x} (segment [{a}, {b}])")]
    StepUnderflow { x: f64, a: f64, b: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
