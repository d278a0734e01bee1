use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),
    #[error("incompatible orbits: {0}")]
    IncompatibleOrbits(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),
    #[error("no feasible schedule: {0}")]
    Infeasible(String),
    #[error("solver stopped without a solution: {0}")]
    NoSolution(String),
    #[error("cache file error: {0}")]
    Cache(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Milp(#[from] reossp_milp::MilpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
