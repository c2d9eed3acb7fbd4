use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid order parameter at index {index}: {reason}")]
    InvalidOrderParameter { index: usize, reason: String },

    #[error("invalid temperature: gamma = {0} (must be finite and >= 0)")]
    InvalidTemperature(f64),

    #[error("grid half-width {half_width} does not contain 6 standard deviations ({required}) of the total noise")]
    GridTooNarrow { half_width: f64, required: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("integrand is not finite at grid node x = {0}")]
    InvalidIntegrand(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported order k = {k} (at most {max})")]
    UnsupportedOrder { k: usize, max: usize },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("not a Parisi measure at gamma = {gamma}: {reason}")]
    NotAParisiMeasure { gamma: f64, reason: String },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
