use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("check failed: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

impl From<acstab_core::Error> for CliError {
    fn from(e: acstab_core::Error) -> Self {
        use acstab_core::Error as E;
        match e {
            E::Config(_) | E::Dimension { .. } | E::Degree => CliError::Config(e.to_string()),
            E::Singular(_) | E::Solver(_) | E::Analysis(_) => CliError::Solver(e.to_string()),
        }
    }
}
