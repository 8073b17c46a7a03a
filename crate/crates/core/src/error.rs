use thiserror::Error;

/// Errors raised across the library. Each variant maps to a stable
/// machine-readable kind string used by the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown species `{0}` (expected `kaon` or `bmeson`)")]
    UnknownSpecies(String),

    #[error("no tagging channels registered for parent {0}")]
    NoChannels(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid time pair ({t_a}, {t_b}): times must be finite and non-negative")]
    InvalidTime { t_a: f64, t_b: f64 },

    #[error("time ordering violated: t_b = {t_b} < t_a = {t_a}")]
    TimeOrdering { t_a: f64, t_b: f64 },

    #[error("rho = {rho} outside admissible bounds [{lower}, {upper}] at t = {t}")]
    InadmissibleRho {
        t: f64,
        rho: f64,
        lower: f64,
        upper: f64,
    },

    #[error("time {t} outside tabulated rho range [{start}, {end}]")]
    RhoOutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid rho table: {0}")]
    InvalidRhoTable(String),

    #[error("efficiency weight a{index} = {value} outside [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },

    #[error("degenerate asymmetry denominator: both joints below 1e-300")]
    DegenerateDenominator,

    #[error("quadrature did not reach relative tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureNonConvergence { tolerance: f64, estimate: f64 },

    #[error("infeasible total efficiency {0}: must lie in (0, 1]")]
    InfeasibleEta(f64),

    #[error("empty time grid")]
    EmptyGrid,

    #[error("P{pair} = {value} at ({t_a}, {t_b}) is not a probability")]
    NotAProbability {
        pair: usize,
        value: f64,
        t_a: f64,
        t_b: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable identifier for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownSpecies(_) => "unknown-species",
            Error::NoChannels(_) => "no-channels",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidTime { .. } => "invalid-time",
            Error::TimeOrdering { .. } => "time-ordering",
            Error::InadmissibleRho { .. } => "inadmissible-rho",
            Error::RhoOutOfRange { .. } => "rho-out-of-range",
            Error::InvalidRhoTable(_) => "invalid-rho-table",
            Error::WeightOutOfRange { .. } => "weight-out-of-range",
            Error::DegenerateDenominator => "degenerate-denominator",
            Error::QuadratureNonConvergence { .. } => "quadrature-non-convergence",
            Error::InfeasibleEta(_) => "infeasible-eta",
            Error::EmptyGrid => "empty-grid",
            Error::NotAProbability { .. } => "not-a-probability",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
