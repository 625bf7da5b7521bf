use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit status: 1 validation, 2 numerical or property failure,
    /// 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Validation(_) | BenchError::Parse { .. } => 1,
            BenchError::Numerical(_) => 2,
            BenchError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<doa_core::Error> for BenchError {
    fn from(e: doa_core::Error) -> Self {
        use doa_core::Error as E;
        match e {
            E::Dimension(_) | E::Validation(_) => BenchError::Validation(e.to_string()),
            E::Singular { .. } | E::DegenerateDegree { .. } | E::Numerical(_) => {
                BenchError::Numerical(e.to_string())
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
