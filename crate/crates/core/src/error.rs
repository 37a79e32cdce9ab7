use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("matrix size {n} is outside {min}..={max} for {what}")]
    SizeOutOfRange {
        what: &'static str,
        n: usize,
        min: usize,
        max: usize,
    },

    #[error("range [{lo}, {hi}) is empty or exceeds the {total} available terms")]
    BadRange { lo: u64, hi: u64, total: u64 },

    #[error("invalid partition plan: {0}")]
    Plan(String),

    #[error("no closed-form permanent is known for {0}")]
    NoTheory(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
