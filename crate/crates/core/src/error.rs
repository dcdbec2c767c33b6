use thiserror::Error;

/// Errors produced by the graphon routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// A derivative or ratio was requested at a singular point.
    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("invalid graphon: {0}")]
    InvalidGraphon(String),

    #[error("invalid star weights: {0}")]
    InvalidWeights(String),

    #[error("invalid subgraph: {0}")]
    InvalidSubgraph(String),

    /// The ψ profile has no interior maximum.
    #[error("profile error: {0}")]
    Profile(String),

    /// The α/β elimination of the bipodal system divides by zero.
    #[error("multiplier elimination is singular (equal block derivatives on the two clusters)")]
    EliminationSingular,

    /// Newton did not reach tolerance; a continuation path is needed.
    #[error("no convergence after {iterations} Newton iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The edge density is (numerically) in the bad set of the model.
    #[error("edge density {e} is flagged as a bad value for this model")]
    BadDensity { e: f64 },

    #[error("continuation step underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },

    /// The constraint targets could not be met.
    #[error("infeasible targets: constraint residual {residual:e}")]
    Infeasible { residual: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
