use ibm_core::SeedSpec;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ibm_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("replica {replica} ({seed}): {source}")]
    Replica { replica: u32, seed: SeedSpec, source: ibm_core::Error },
}

impl CliError {
    /// 2 for configuration and input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) | CliError::Replica { source: e, .. } => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &ibm_core::Error) -> i32 {
    use ibm_core::Error::*;
    match e {
        InvalidParameter { .. } | UnsupportedModel(_) | Config(_) | Io(_) | Csv(_) | Json(_) | InsufficientData(_)
        | Domain(_) => 2,
        _ => 3,
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
