use thiserror::Error;

/// Everything that can go wrong while building or checking a solution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value falls outside a branch or admissible range; `bound` names the
    /// violated endpoint (e.g. `Xi_2`).
    #[error("range error: {message} (violated bound {bound} = {value})")]
    Range {
        message: String,
        bound: String,
        value: f64,
    },

    /// Division by a formal series whose constant term vanishes.
    #[error("singular series: constant term of divisor is zero")]
    SingularSeries,

    /// The derivative vanishes at the expansion point, so the inverse is not
    /// analytic there.
    #[error("critical point: {0}")]
    CriticalPoint(String),

    /// The equation admits no exterior radial solution for these parameters.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An ODE trajectory ran into a singular set.
    #[error("singularity reached at r = {radius}: {message}")]
    Singularity { radius: f64, message: String },

    /// A profile that must be strictly convex is not.
    #[error("convexity violated at r = {radius}")]
    Convexity { radius: f64 },

    /// A harmonic function carries growing modes above tolerance.
    #[error("not decaying: growing-mode amplitude {amplitude:e} at degree {degree}")]
    NotDecaying { degree: usize, amplitude: f64 },

    /// Internal numerical failure (non-convergence, non-finite values).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range { .. } => "range",
            Error::SingularSeries => "singular_series",
            Error::CriticalPoint(_) => "critical_point",
            Error::NoSolution(_) => "no_solution",
            Error::Contract(_) => "contract",
            Error::Singularity { .. } => "singularity",
            Error::Convexity { .. } => "convexity",
            Error::NotDecaying { .. } => "not_decaying",
            Error::Numerical(_) => "numerical",
        }
    }

    pub(crate) fn range(message: impl Into<String>, bound: impl Into<String>, value: f64) -> Self {
        Error::Range {
            message: message.into(),
            bound: bound.into(),
            value,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
