use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("root {index} of P'_{degree} did not converge after {iterations} iterations")]
    NoConvergence {
        degree: usize,
        index: usize,
        iterations: usize,
    },

    /// The per-step linear system could not be solved reliably; usually the
    /// step size is above the solvability threshold.
    #[error("step {step}: step matrix is singular or ill-conditioned (cond1 = {condition:.3e})")]
    IllConditionedStep { step: usize, condition: f64 },

    #[error("component {component} has no exact solution attached")]
    MissingExact { component: usize },

    #[error("t = {t} lies outside the domain [0, {t_end}]")]
    OutOfDomain { t: f64, t_end: f64 },

    #[error("refinement N = {intervals}: {source}")]
    Refinement {
        intervals: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("problem {problem}, m = {m}: {source}")]
    Experiment {
        problem: String,
        m: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn problem(msg: impl Into<String>) -> Self {
        Error::InvalidProblem(msg.into())
    }
}
