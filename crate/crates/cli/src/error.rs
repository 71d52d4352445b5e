use std::process::ExitCode;

/// CLI failure classes. Each maps to a fixed process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    /// 1 config, 2 divergence or other runtime failure, 3 I/O (including unreadable checkpoints).
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        })
    }
}

impl From<deepmod_core::Error> for CliError {
    fn from(e: deepmod_core::Error) -> Self {
        use deepmod_core::Error as E;
        match e {
            E::Config(_) | E::Input(_) => CliError::Config(e.to_string()),
            E::Divergence { .. } | E::Internal(_) | E::Protocol(_) => CliError::Runtime(e.to_string()),
            E::Checkpoint(_) | E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
