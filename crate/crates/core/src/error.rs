use thiserror::Error;

use crate::kkm::BalancedPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    /// Some family of sets `S` has `|G[S]| <= |S|`.
    #[error("dragon marriage condition violated by sets {witness:?}")]
    ConditionViolated { witness: Vec<usize> },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("balanced point search failed (best residual {:.3e})", best.residual)]
    SearchFailed { best: Box<BalancedPoint> },

    #[error("envy check failed: player {player} has margin {margin:.3e} when the dragon takes {dragon}")]
    EnvyFailed { player: usize, dragon: usize, margin: f64 },

    #[error("partition equivalence violated: {0}")]
    PartitionEquivalence(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
