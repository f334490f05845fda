use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside an operation's domain (degrees, dimensions, shapes).
    #[error("domain error: {0}")]
    Domain(String),

    /// A text form or configuration could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A matrix that must be nonsingular turned out singular.
    #[error("singular system: {0}")]
    Singular(String),

    /// The Galerkin basis handed to assembly is linearly dependent.
    #[error("dependent basis: {0}; prune the generating set before assembly")]
    DependentBasis(String),

    /// Conjugate gradients stopped before reaching the tolerance.
    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("unknown manufactured solution '{name}'; available: {available}")]
    UnknownSolution { name: String, available: String },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
