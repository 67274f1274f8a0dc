//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, detection, estimation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A density, schedule, or plan parameter violates an invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation mixed Gaussian and Poisson densities.
    #[error("family mismatch: expected {expected}, got {actual}")]
    FamilyMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    /// An observation is outside the support of its family.
    #[error("invalid observation {value} for {family} family: {reason}")]
    InvalidObservation {
        family: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A post-change density was requested at an undefined index.
    #[error("post-change density undefined at (n={n}, nu={nu}): {reason}")]
    UndefinedIndex { n: u64, nu: u64, reason: String },

    /// A probe parameter fell below the uncertainty-class bound.
    #[error("probe parameter {probe} below class bound {bound} at (n={n}, nu={nu})")]
    ProbeBelowBound {
        probe: f64,
        bound: f64,
        n: u64,
        nu: u64,
    },

    /// An estimator was handed a plan whose model shape it cannot use.
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),

    /// Calibration bounds do not bracket the target.
    #[error("calibration bounds [{lo}, {hi}] do not bracket target {target}: estimates [{est_lo}, {est_hi}]")]
    NonBracketing {
        lo: f64,
        hi: f64,
        target: f64,
        est_lo: f64,
        est_hi: f64,
    },

    /// Every Monte Carlo trial was excluded (e.g. all false-alarmed before the change).
    #[error("no usable trials: {0}")]
    NoUsableTrials(String),

    /// An unlimited-window generalized detector ran past its exactness cap.
    #[error("unlimited-window generalized detector exceeded {limit} steps; set a finite window")]
    WindowRequired { limit: u64 },

    /// Configuration file errors (parse, schema, or semantic).
    #[error("config error: {0}")]
    Config(String),

    /// Input data that violates a pipeline precondition.
    #[error("data error: {0}")]
    Data(String),

    /// CSV cell that failed to parse, with its location.
    #[error("csv parse error at row {row}, column {column}: {reason}")]
    CsvCell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether this error is a configuration/validation problem (as opposed
    /// to a runtime failure). The CLI maps the two classes to distinct exit codes.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter(_) | Error::PlanMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
