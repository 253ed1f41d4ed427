use thiserror::Error;

/// Errors raised by the game model and the dynamics built on top of it.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge id `{0}`")]
    UnknownEdge(String),
    #[error("unknown player id `{0}`")]
    UnknownPlayer(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid profile for player `{player}`: {reason}")]
    InvalidProfile { player: String, reason: String },
    #[error("player `{player}` does not use edge `{edge}`")]
    NotAUser { player: String, edge: String },
    #[error("instance has no players")]
    NoPlayers,
    #[error("operation requires at least two players, instance has {0}")]
    TooFewPlayers(usize),
    #[error("minimum player weight is {min_weight}, not 1; bound not applicable")]
    NotNormalized { min_weight: f64 },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("no {from} -> {to} path for player `{player}`")]
    NoPath {
        player: String,
        from: String,
        to: String,
    },
    #[error("invalid instance: {}", reasons.join("; "))]
    InvalidInstance { reasons: Vec<String> },
}
