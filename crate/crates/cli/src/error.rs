use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] homodyne_core::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Process exit status: 2 configuration, 3 oversaturation, 4 I/O, 1 other model errors.
    pub fn exit_code(&self) -> i32 {
        use homodyne_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Model(E::InvalidParameter { .. } | E::InvalidEnsemble(_) | E::Domain { .. }) => 2,
            CliError::Model(E::Oversaturated { .. }) => 3,
            CliError::Model(_) => 1,
            CliError::Io { .. } => 4,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
