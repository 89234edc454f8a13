use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or semantically invalid configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// Geometry the model cannot evaluate (coincident points, zero
    /// divergence, receiver above the emitters, ...).
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// The environment was driven outside its contract.
    #[error("environment contract violated: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
