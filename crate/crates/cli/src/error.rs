use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{} is not valid JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: posg_fsc::Error },

    #[error(transparent)]
    Core(#[from] posg_fsc::Error),

    #[error("{0}")]
    Usage(String),

    #[error("automaton and formula disagree on {0}")]
    LtlMismatch(String),
}

impl CliError {
    /// 2 for anything wrong with the inputs, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use posg_fsc::Error as E;
        let core = match self {
            CliError::Write { .. } => return 1,
            CliError::Read { .. } | CliError::Json { .. } | CliError::Usage(_) | CliError::LtlMismatch(_) => return 2,
            CliError::Input { source, .. } => source,
            CliError::Core(e) => e,
        };
        match core {
            E::Singular { .. } | E::StepCap(_) => 1,
            _ => 2,
        }
    }
}

pub trait InputContext<T> {
    /// Attach the file an error came from.
    fn at(self, path: &std::path::Path) -> Result<T, CliError>;
}

impl<T> InputContext<T> for posg_fsc::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T, CliError> {
        self.map_err(|source| CliError::Input {
            path: path.to_path_buf(),
            source,
        })
    }
}
