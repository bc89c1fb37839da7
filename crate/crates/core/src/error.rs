use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mixture `{name}`: {reason}")]
    InvalidMixture { name: String, reason: String },

    #[error(
        "posterior success probability is not monotone in the data near {at}; \
         use region integration or the Monte Carlo path instead"
    )]
    NonMonotone { at: f64 },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("quadrature did not reach tolerance: estimate {value} with error {abs_error} after {subdivisions} subdivisions")]
    Quadrature {
        value: f64,
        abs_error: f64,
        subdivisions: usize,
    },

    #[error("EM did not converge after {iterations} iterations (best KL {kl})")]
    EmNotConverged {
        iterations: usize,
        kl: f64,
        best: crate::MixtureNormal<f64>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
