use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent run configuration.
    #[error("config error{}: {key}: {message}", line_suffix(*.line))]
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },

    /// Malformed text input (mesh tables, CSV series).
    #[error("parse error at {source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("mesh error: {0}")]
    Mesh(String),

    /// Solver failure: non-convergence, NaN, or blow-up.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn line_suffix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl Error {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn config_at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            line: Some(line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
