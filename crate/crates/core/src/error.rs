//! Error type shared across the crate.

/// Everything that can go wrong in the numeric layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("root finding did not converge after {iterations} iterations (worst relative residual {residual:.3e})")]
    RootFinding { iterations: usize, residual: f64 },

    #[error("degenerate map: {0}")]
    DegenerateMap(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameter(String),

    #[error("design system is rank deficient in the monomial space: {0}")]
    RankDeficient(String),

    #[error("cycle grouping ambiguous: {0}")]
    CycleGrouping(String),

    #[error("fit residual {residual:.3e} above threshold {threshold:.3e}; {detail}")]
    FitResidual {
        residual: f64,
        threshold: f64,
        detail: String,
    },

    #[error("top-form root {root} not of the form u + 1/u with u^q = 1, q <= {n}; fit quality suspect")]
    UnmatchedInfinityRoot { root: String, n: u32 },

    #[error("center count off at period {period}: found {found}, expected {expected}")]
    CenterCount {
        period: u32,
        found: usize,
        expected: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("membership indeterminate: {0}")]
    Indeterminate(String),

    #[error("negative mass {negative:.3e} exceeds {limit_percent}% of total mass {total:.3e}; potential under-sampled")]
    NegativeMass {
        negative: f64,
        total: f64,
        limit_percent: f64,
    },

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
