use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interpolation requires distinct designs")]
    ZeroDistance,

    #[error("design parameter `{name}` = {value} outside [{lower}, {upper}]")]
    OutOfBoundsDesign {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid design bounds: {0}")]
    InvalidBounds(String),

    #[error("unknown object shape `{0}`")]
    UnknownShape(String),

    #[error("unknown object scale {0}")]
    UnknownScale(f64),

    #[error("invalid episode config: {0}")]
    InvalidConfig(String),

    #[error("numerical blowup at step {step}: {what}")]
    NumericalBlowup { step: usize, what: String },

    #[error("pool needs at least two entries to propose a candidate, has {0}")]
    PoolTooSmall(usize),

    #[error("pool is empty")]
    EmptyPool,

    #[error("seed design {index} out of bounds: {source}")]
    SeedOutOfBounds {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown design id `{0}`")]
    UnknownId(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
