use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("step size underflow at t = {t} (h = {h:e}); problem looks stiff")]
    Stiffness { t: f64, h: f64 },

    #[error("component {component} went negative ({value:e}) at t = {t}")]
    Negativity {
        t: f64,
        component: &'static str,
        value: f64,
    },

    #[error("no critical contact rate: the threshold expression is not positive")]
    NoCriticalBeta,

    #[error("endemic polynomial denominator vanished at I = {0:e}")]
    Singularity(f64),

    #[error("endemic root near I = {i:e} did not polish (residual {residual:e})")]
    RootPolish { i: f64, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sensitivity index undefined: R0 = 0")]
    UndefinedIndex,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Stiffness { .. }
                | Error::Negativity { .. }
                | Error::NoCriticalBeta
                | Error::Singularity(_)
                | Error::RootPolish { .. }
                | Error::UndefinedIndex
        )
    }
}
