use scca::error::SccaError;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input or configuration; exit code 2.
    Input(String),
    /// The estimation itself failed; exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<SccaError> for CliError {
    fn from(e: SccaError) -> Self {
        match e {
            SccaError::InvalidGrid(_)
            | SccaError::InvalidBasis(_)
            | SccaError::InvalidSample(_)
            | SccaError::GridMismatch { .. }
            | SccaError::InvalidArgument(_)
            | SccaError::InconsistentModel(_) => CliError::Input(e.to_string()),
            SccaError::DegenerateMargin
            | SccaError::SingularBlock
            | SccaError::NoNondegenerateProjection
            | SccaError::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}
