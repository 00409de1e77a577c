use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("level {level} exceeds the configured cap of ±{cap}")]
    LevelCap { level: i64, cap: i64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid prime set: {0}")]
    InvalidPrimeSet(String),
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("operation requires an S-adic filtration")]
    NotSAdic,
    #[error("window overflow: {0}")]
    WindowOverflow(String),
    #[error("resolution mismatch: {0}")]
    Resolution(String),
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("coset count {count} exceeds the dimension cap {cap}")]
    DimensionCap { count: String, cap: usize },
    #[error("tolerance {eps:e} is not reachable within the level cap")]
    Unreachable { eps: f64 },
    #[error("radial series does not converge: {0}")]
    Nonconvergent(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
