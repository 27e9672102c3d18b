use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("malformed flow: {0}")]
    MalformedFlow(String),
    #[error("no path from source to sink")]
    NoPath,
    #[error("phase cap of {cap} exceeded\n{dump}")]
    PhaseCap { cap: usize, dump: String },
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
