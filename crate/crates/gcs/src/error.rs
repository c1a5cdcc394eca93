use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Constellation {
        path: PathBuf,
        #[source]
        source: gcs_core::Error,
    },

    #[error(transparent)]
    Core(#[from] gcs_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short category tag used in the CLI's one-line error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::Constellation { .. } => "constellation",
            Error::Core(gcs_core::Error::Diverged { .. }) => "diverged",
            Error::Core(_) => "model",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Usage(_) | Error::Constellation { .. } => 2,
            _ => 1,
        }
    }

    /// `error kind=<kind> msg=<json string>` on a single line.
    pub fn report_line(&self) -> String {
        let msg = serde_json::to_string(&self.to_string()).unwrap_or_else(|_| "\"?\"".into());
        format!("error kind={} msg={}", self.kind(), msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_one_line() {
        let e = Error::Config {
            path: "a.conf".into(),
            line: 3,
            msg: "bad\nvalue".into(),
        };
        let line = e.report_line();
        assert!(!line.contains('\n'));
        assert!(line.starts_with("error kind=config msg=\"a.conf:3: bad\\nvalue\""));
        assert_eq!(e.exit_code(), 2);
    }
}
