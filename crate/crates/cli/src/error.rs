use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or argument values; exits with status 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ocular_parallax::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("websocket: {0}")]
    Socket(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ocular_parallax::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::InvalidInput(_) | E::UnknownEyeModel(_) | E::Scene(_)) => 2,
            _ => 1,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
