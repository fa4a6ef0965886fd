use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("moment of order {m} of the power-{n} density diverges for kappa >= {bound}")]
    MomentDivergence { m: u32, n: u32, bound: f64 },

    #[error("moment inversion failed: {0}")]
    Inversion(String),

    #[error("no root in [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    NoSolution { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("line {line}: cannot parse {text:?} as a number")]
    Parse { line: usize, text: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical procedure rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::NoConvergence(_)
                | Error::NoSolution { .. }
                | Error::Inversion(_)
                | Error::FitFailure(_)
                | Error::MomentDivergence { .. }
        )
    }
}
