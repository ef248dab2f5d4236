use std::path::PathBuf;

/// Failures of a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] effmap_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: line {line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 configuration or input, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        use effmap_core::Error as E;
        match self {
            Self::Config(_) | Self::Parse { .. } => 2,
            Self::Core(E::Config(_) | E::Domain(_) | E::Underdetermined { .. }) => 2,
            Self::Core(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
