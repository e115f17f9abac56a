use std::path::PathBuf;

/// Errors raised by the operator-inference pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: format error at byte {offset}: {reason}")]
    Format {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("rank deficient: requested {requested} basis vectors, numeric rank is {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("integrator error: {0}")]
    Integrator(String),

    #[error("simulation diverged at step {step}")]
    Divergence { step: usize },

    #[error("gradient unavailable: a roll-out diverged (objective = {objective})")]
    GradientUnavailable { objective: f64 },

    #[error("no Lyapunov certificate: {0}")]
    NoCertificate(String),

    #[error("extrapolation: {0}")]
    Extrapolation(String),

    #[error("training failed: {0}")]
    TrainingFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (divergence, singular solves,
    /// missing certificates) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integrator(_)
                | Error::Divergence { .. }
                | Error::GradientUnavailable { .. }
                | Error::NoCertificate(_)
                | Error::TrainingFailed(_)
                | Error::RankDeficient { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
