use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },
    #[error("{0} is out of the supported range")]
    Range(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate query: the projection is a point mass at {0}")]
    DegenerateQuery(u8),
    #[error("empirical mean is undefined on an empty dataset")]
    EmptyDataset,
    #[error("sample-splitting curator has no unused fold left (q = {folds})")]
    FoldsExhausted { folds: usize },
    #[error("{what} exceeds the exact-mode limit ({limit}); use Monte Carlo instead")]
    SizeLimit { what: String, limit: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
