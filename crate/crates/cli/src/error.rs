use shearlab::ShearError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error(transparent)]
    Compute(ShearError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ShearError> for CliError {
    fn from(e: ShearError) -> Self {
        match e {
            ShearError::InvalidGroup(_) | ShearError::InvalidArgument(_) | ShearError::InsufficientData { .. } | ShearError::InsufficientSpan(_) => {
                CliError::Validation(e.to_string())
            }
            ShearError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Compute(other),
        }
    }
}

impl CliError {
    /// 2 for validation errors, 3 for budget exhaustion, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
            _ => 1,
        }
    }
}
