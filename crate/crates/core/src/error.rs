use crate::rng::SeedSpec;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("degenerate intensity: one-point density vanishes at {0}")]
    DegenerateIntensity(String),

    #[error("kernel discretization error: eigenvalue {eigenvalue:.3e} outside [0, 1] with {grid_size} nodes (grid too coarse?)")]
    KernelDiscretization { eigenvalue: f64, grid_size: usize },

    #[error("numeric failure: {message} (replay with {seed})")]
    Numeric { message: String, seed: SeedSpec },

    #[error("particle collision at distance {distance:.3e}")]
    Collision { distance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Gibbs sampler could not find a finite-energy start after {attempts} attempts")]
    InitFailure { attempts: usize },

    #[error("integrator aborted at t={time}: {reason} (replay with {seed})")]
    StepAborted { time: f64, reason: String, seed: SeedSpec },

    #[error("A4 tail integral does not converge (partial sum {partial_sum:.6e} after {shells} shells)")]
    A4Violation { partial_sum: f64, shells: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
