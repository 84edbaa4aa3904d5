use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown or duplicate wire label: {0}")]
    Label(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("positivity violated: eigenvalue {0:.3e}")]
    Positivity(f64),
    #[error("normalisation violated: trace {0}")]
    Normalization(f64),
    #[error("invalid permutation: {0}")]
    Permutation(String),
    #[error("basis is not linearly independent")]
    LinearDependence,
    #[error("map is not CPTP: {0}")]
    NotCptp(String),
    #[error("invalid process tensor: {0}")]
    InvalidProcess(String),
    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),
    #[error("overlapping supports: {0}")]
    Overlap(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("conditioning on an event of probability {0:.3e}")]
    UndefinedConditional(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
