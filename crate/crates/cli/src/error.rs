use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] starwalk::Error),
    #[error("cannot write output {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// The reader went away (`starwalk ... | head`); not worth reporting.
    pub fn is_broken_pipe(&self) -> bool {
        use std::io::ErrorKind::BrokenPipe;
        match self {
            CliError::Io(e) => e.kind() == BrokenPipe,
            CliError::Core(starwalk::Error::Io(kind, _)) => *kind == BrokenPipe,
            _ => false,
        }
    }
}
