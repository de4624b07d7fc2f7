use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no spectral gap between sorted eigenvalues {k} and {next} (separation {gap:.3e})")]
    GapFailure { k: usize, next: usize, gap: f64 },
    #[error("Sylvester equation is singular (eigenvalue separation {separation:.3e})")]
    SylvesterSingular { separation: f64 },
    #[error("{what} did not converge after {steps} steps (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        steps: usize,
        residual: f64,
    },
    #[error("continuation step size underflow near tau = {tau:.6}")]
    PathFailure { tau: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero-order coefficient is numerically singular (pivot ratio {pivot_ratio:.3e})")]
    SingularZeroOrder { pivot_ratio: f64 },
    #[error("power iteration broke down at step {step}")]
    Breakdown { step: usize },
    #[error("division by a vanishing inner product")]
    DivideByZero,
    #[error("branch-point Jacobian is singular (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },
    #[error("Schur decomposition failed to converge")]
    SchurFailure,
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("at anchor {}{:+}i: {source}", anchor.re, anchor.im)]
    AtAnchor {
        anchor: Complex64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, anchor: Complex64) -> Self {
        match self {
            e @ Error::AtAnchor { .. } => e,
            e => Error::AtAnchor {
                anchor,
                source: Box::new(e),
            },
        }
    }

    /// Error with any anchor wrapping removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtAnchor { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
