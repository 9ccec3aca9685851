use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Pressure channel of the stack model, used to report which gas diverged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Hydrogen,
    Oxygen,
    Water,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Hydrogen => "hydrogen",
            Channel::Oxygen => "oxygen",
            Channel::Water => "water",
        })
    }
}

/// One probe of the load-following calibration search.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationProbe {
    pub t_f_s: f64,
    pub max_slope_w_per_s: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid fuel-cell state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("model diverged: {channel} partial pressure reached {value_atm:.6} atm")]
    ModelDivergence { channel: Channel, value_atm: f64 },

    #[error("calibration infeasible: {reason}")]
    CalibrationInfeasible { reason: String, probes: Vec<CalibrationProbe> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rack budget {budget_w:.3} W is below the idle floor {floor_w:.3} W")]
    InfeasibleBudget { budget_w: f64, floor_w: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("metrics undefined: run contains no requests")]
    UndefinedMetrics,

    #[error("invalid surge: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Trace(#[from] TraceError),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidState(_) => "invalid_state",
            Error::InvalidParams(_) => "invalid_params",
            Error::ModelDivergence { .. } => "model_divergence",
            Error::CalibrationInfeasible { .. } => "calibration_infeasible",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InfeasibleBudget { .. } => "infeasible_budget",
            Error::Precondition(_) => "precondition",
            Error::UndefinedMetrics => "undefined_metrics",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Trace(_) => "trace",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

/// Problems found while ingesting a trace file. Row numbers are 1-based and
/// count the header as row 1, so they match what an editor shows.
#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: malformed: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("row {row}: time {t_s} does not increase past previous {prev_s}")]
    NonMonotone { row: usize, t_s: f64, prev_s: f64 },
    #[error("row {row}: negative value {value}")]
    Negative { row: usize, value: f64 },
    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },
    #[error("row {row}: intensity {value} outside [0, 1]")]
    OutOfRange { row: usize, value: f64 },
    #[error("demand {demand_w:.1} W at t = {t_s} s exceeds rated power {rated_w:.1} W")]
    AboveRated { t_s: f64, demand_w: f64, rated_w: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
