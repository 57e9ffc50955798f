use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("order deficient: requested order {requested}, achieved rank {achieved}")]
    OrderDeficient { requested: usize, achieved: usize },

    #[error("degenerate basis: frequencies {0} Hz and {1} Hz coincide modulo the sampling rate")]
    DegenerateBasis(f64, f64),

    #[error("cardinality mismatch: channel 1 has {0} components, channel 2 has {1}")]
    Cardinality(usize, usize),

    #[error("invalid component: {0}")]
    InvalidComponent(String),

    #[error("no fold-index candidate within {tol_hz} Hz")]
    NoCandidate { tol_hz: f64 },

    #[error("ambiguous resolution: candidates at {first_hz} Hz and {second_hz} Hz")]
    Ambiguous { first_hz: f64, second_hz: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}
