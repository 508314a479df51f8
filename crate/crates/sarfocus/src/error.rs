use std::path::PathBuf;

/// Harness failures, grouped by the exit code the CLI reports for them.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Numeric(#[from] sarfocus_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl HarnessError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Self::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// Process exit code: 2 for configuration, 3 for numerical and 4 for
    /// file errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numeric(inner) => match inner {
                sarfocus_core::Error::InvalidParameter { .. }
                | sarfocus_core::Error::Unsupported { .. }
                | sarfocus_core::Error::PixelOutsidePatch { .. }
                | sarfocus_core::Error::EmptyGrid => 2,
                _ => 3,
            },
            Self::Io { .. } | Self::Format { .. } => 4,
        }
    }
}
