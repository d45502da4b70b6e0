use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("{context}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("action outside its box at coordinate {coord}: {value} not in [{lo}, {hi}]")]
    ActionOutOfBounds {
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("kernel matrix not positive definite after escalating jitter to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("non-finite value in rollout at step {step} (candidate {candidate})")]
    NonFiniteRollout { step: usize, candidate: usize },

    #[error("non-finite pessimistic value recorded at episode {episode}")]
    NonFiniteRecord { episode: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<CoreError>,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidParameter(msg.into())
    }

    pub fn in_episode(self, episode: usize) -> Self {
        CoreError::Episode {
            episode,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
