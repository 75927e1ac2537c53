use nphoton_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid input: malformed config, bad flag value, out-of-domain parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A solver or propagator failed on valid input.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }

    pub fn csv(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::IterationLimit { .. }
            | CoreError::NotHermitian { .. }
            | CoreError::Propagation(_)
            | CoreError::Capacity(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
