use thiserror::Error;

#[derive(Debug, Error)]
pub enum FclaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible grid: {0}")]
    InfeasibleGrid(String),

    #[error("placement violates spacing constraint: {0}")]
    SpacingViolation(String),

    #[error("singular system: pivot {pivot:.3e} below tolerance {tolerance:.3e}")]
    Singular { pivot: f64, tolerance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("solver infeasible: {0}")]
    Infeasible(String),

    #[error("precoder column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("exhaustive enumeration of {count} placements exceeds cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("trial {trial} at sweep point {point}: {source}")]
    Trial {
        point: String,
        trial: usize,
        #[source]
        source: Box<FclaError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FclaError>;
