use thiserror::Error;

/// Errors raised by the dynamics, control, estimation and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("euler-angle singularity: |cos(theta)| = {cos_theta:.3e} below {limit:.0e}")]
    Singularity { cos_theta: f64, limit: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(&'static str),

    #[error("riccati solve failed: {0}")]
    SolveFailure(String),

    #[error("attitude allocation infeasible: {0}")]
    AllocationDomain(String),

    #[error("thrust allocation KKT system is singular")]
    KktSingular,

    #[error("matrix is not positive definite after jitter retry")]
    NotPositiveDefinite,

    #[error("innovation covariance is singular")]
    InnovationCovSingular,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("log parse error at row {row}: {reason}")]
    LogParse { row: usize, reason: String },

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },

    #[error("{stage} failed")]
    InStage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step} (t = {time:.2} s) failed in {stage}")]
    Step {
        step: usize,
        time: f64,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::InStage {
            stage,
            source: Box::new(e),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            reason: err.to_string(),
        }
    }
}
