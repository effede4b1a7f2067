use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input is outside its admissible domain.
    #[error("invalid parameter `{name}`: {constraint} (got {value})")]
    Parameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("path gain is singular at zero distance")]
    Singularity,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// Numerical integration did not reach the requested tolerance.
    #[error("accuracy error: {message} (last estimate {estimate:.6e}, relative change {relative_change:.3e})")]
    Accuracy {
        message: String,
        estimate: f64,
        relative_change: f64,
    },

    #[error("objective is identically zero on the search grid")]
    FlatObjective,

    #[error("budget of {budget} trials is below the minimum of {minimum}")]
    Budget { budget: u64, minimum: u64 },

    #[error("config key `{key}`: {message}")]
    Key { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, constraint: &'static str, value: f64) -> Self {
        Error::Parameter {
            name,
            constraint,
            value,
        }
    }
}
