use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("metric entry {index} is {value}; every diagonal entry must be positive and finite")]
    InvalidMetric { index: usize, value: f64 },
    #[error("empty feasible set at coordinate {0}")]
    EmptyFeasibleSet(usize),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error("malformed problem file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
