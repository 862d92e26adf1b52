use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("non-dyadic data: {0}")]
    NonDyadic(String),
    #[error("gluing failure between cells {pair:?}: {values}")]
    Gluing { pair: (String, String), values: String },
    #[error("cells do not partition the space: {0}")]
    Partition(String),
    #[error("invalid chart: {0}")]
    ChartInvalid(String),
    #[error("unbounded return: the word {witness} avoids the set for the whole budget")]
    ReturnUnbounded { witness: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("operands belong to different subshifts")]
    MixedSystems,
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cover is not of grid type: {0}")]
    NonGridCover(String),
}

pub type Result<T> = std::result::Result<T, Error>;
