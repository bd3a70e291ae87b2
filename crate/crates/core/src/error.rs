use thiserror::Error;

/// Errors raised by the effgeo library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A probability fell outside the accepted interval `[guard, 1 - guard]`.
    #[error("{name} = {value} is not a probability strictly inside (0, 1)")]
    InvalidProbability { name: String, value: f64 },

    /// A coordinate point has no valid risk table.
    #[error("{component} = {value:.4} {relation}")]
    OutOfDomain {
        component: String,
        value: f64,
        relation: &'static str,
    },

    #[error("unsupported coordinate system / target combination: {0}")]
    UnsupportedSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate counts: {0}")]
    Degenerate(String),

    #[error("configuration error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn out_of_domain_ge1(component: &str, value: f64) -> Self {
        Error::OutOfDomain {
            component: component.to_string(),
            value,
            relation: "≥ 1",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
