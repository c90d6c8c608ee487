use thiserror::Error;

/// Errors raised while building or solving a discretized plate problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index ({i}, {j}) out of range for {n1_bar} x {n2} interior grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        n1_bar: usize,
        n2: usize,
    },

    #[error("point {coord} = {value} lies outside [{lo}, {hi}]")]
    OutsideDomain {
        coord: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("unsupported derivative order {0} (expected 0, 1 or 2)")]
    DerivativeOrder(usize),

    #[error("quadrature order {0} outside supported range 1..=16")]
    QuadratureOrder(usize),

    #[error("cannot integrate over an empty element list")]
    EmptyElements,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular transfer matrix (min pivot {pivot:e})")]
    SingularTransfer { pivot: f64 },

    #[error("matrix is numerically singular: zero pivot at column {column}")]
    Singular { column: usize },

    #[error("near-singular system: min pivot {pivot_min:e} < {threshold:e}")]
    NearSingular { pivot_min: f64, threshold: f64 },

    #[error("inverse iteration did not converge after {iterations} iterations (last relative change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("lift hypothesis violated: requires mu > -P and S > 0 (mu = {mu}, P = {p}, S = {s})")]
    HypothesisViolated { mu: f64, p: f64, s: f64 },

    #[error("trivial input: ||U_x||_0 = {0:e} is numerically zero")]
    TrivialInput(f64),

    #[error("at alpha = {alpha}: {source}")]
    AtAlpha {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
