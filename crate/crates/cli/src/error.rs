use fracmems::FracError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error(transparent)]
    Numerical(#[from] FracError),
}

impl CliError {
    /// 1 for bad input, 2 for a failed check, 3 for a numerical fault.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Assertion(_) => 2,
            CliError::Numerical(e) => match e {
                FracError::Domain(_) => 1,
                FracError::AssertionFailure { .. } | FracError::ExistenceAnomaly { .. } => 2,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
