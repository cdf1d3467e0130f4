use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value out of range: {0}")]
    Bounds(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no complete block within K_max = {k_max}: achieved mass {achieved_mass}, target {target}")]
    NoCompleteBlock {
        k_max: usize,
        achieved_mass: f64,
        target: f64,
    },

    #[error("work budget exceeded: {what} needs {required:.3e} units, budget is {budget:.3e}")]
    Budget {
        what: String,
        required: f64,
        budget: f64,
    },

    #[error("lattice truncation reached mass {achieved_mass} within budget, need 1 - {tolerance:e}")]
    Truncation { achieved_mass: f64, tolerance: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Bounds(_) => "bounds",
            Error::Invalid(_) => "invalid",
            Error::NoCompleteBlock { .. } => "no_complete_block",
            Error::Budget { .. } => "budget",
            Error::Truncation { .. } => "truncation",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by exceeding a configured work or memory budget.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::Truncation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
