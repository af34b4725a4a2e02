use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("negative value {0}")]
    Negative(f64),

    #[error("cap must be strictly positive, got {cap} at index {index}")]
    NonPositiveCap { index: usize, cap: f64 },

    #[error("caps violate the Lipschitz condition between {i} and {j}: |{mi} - {mj}| > {d}")]
    Lipschitz {
        i: usize,
        j: usize,
        mi: f64,
        mj: f64,
        d: f64,
    },

    #[error("chop budget exceeded on edge ending at vertex {0}")]
    ChopBudget(usize),

    #[error("snake segment budget exceeded")]
    SegmentBudget,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
