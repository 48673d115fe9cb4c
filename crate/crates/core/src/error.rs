use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("channel vectors are linearly dependent (rank {rank} < {users} users)")]
    RankDeficient { rank: usize, users: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
