use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across fitting, residual computation and simulation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    /// Column `column` of the design lies in the span of the preceding
    /// columns; `collinear_with` is the earlier column it depends on most.
    #[error("singular design: column {column} is linearly dependent on column {collinear_with}")]
    SingularDesign {
        column: usize,
        collinear_with: usize,
    },

    #[error(
        "IRLS did not converge after {iterations} iterations (max |score| = {max_abs_score:e})"
    )]
    NonConvergence {
        iterations: usize,
        max_abs_score: f64,
        last_beta: Vec<f64>,
    },

    /// Every step-halving attempt left a fitted mean outside the family's support.
    #[error("step halving failed to restore a valid mean at iteration {iteration}")]
    InvalidMean { iteration: usize },

    #[error("dispersion estimate is degenerate: {0}")]
    DegenerateDispersion(String),

    #[error("dispersion estimation failed: {0}")]
    Estimation(String),

    #[error("leverage of observation {index} is {leverage}, residual is undefined")]
    LeverageDegenerate { index: usize, leverage: f64 },

    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("sample has zero variance")]
    DegenerateSample,

    #[error("envelope simulation dropped {dropped} of {total} replicates")]
    Envelope { dropped: usize, total: usize },

    #[error("scenario {name}: {failures} of {replications} replications failed to fit")]
    ScenarioFailures {
        name: String,
        failures: usize,
        replications: usize,
    },

    #[error("unknown {what}: {value}")]
    Unknown { what: &'static str, value: String },
}
