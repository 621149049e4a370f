use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite loss for player {player} at the evaluation point")]
    Evaluation { player: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("singular update system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("run diverged at step {step}")]
    Diverged { step: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
