use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Adaptive quadrature ran out of depth. Carries the best estimate.
    #[error("quadrature tolerance not reached: estimate {estimate}, error bound {error_bound}")]
    Tolerance { estimate: f64, error_bound: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {left} values but {right} posted prices")]
    DimensionMismatch { left: usize, right: usize },

    #[error("mechanism {0} is not supported by this operation")]
    UnsupportedMechanism(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("nothing to write: row set is empty")]
    EmptyRows,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            what,
            value,
            domain,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Tolerance { .. } | Error::Bracket { .. })
    }
}
