use thiserror::Error;

/// Errors raised by spectrum construction, the complexity engine and the
/// criterion evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error(
        "power sum diverges at exponent {tau}{} (requires exponent > {tau_min})",
        coordinate.map(|k| format!(" in coordinate {k}")).unwrap_or_default()
    )]
    Divergence {
        coordinate: Option<usize>,
        tau: f64,
        tau_min: f64,
    },

    #[error("irreducible tail: declared tail {tail} exceeds allowed mass {allowed}")]
    IrreducibleTail { tail: f64, allowed: f64 },

    #[error("budget exceeded ({reason}) after {pops} pops; n >= {lower_bound}")]
    Budget {
        reason: BudgetKind,
        pops: u64,
        lower_bound: u64,
    },

    #[error("grid of {size} products exceeds the cap of {cap}")]
    GridTooLarge { size: f64, cap: u64 },
}

impl Error {
    /// Attach a coordinate index (1-based) to a divergence error.
    pub(crate) fn at_coordinate(self, k: usize) -> Self {
        match self {
            Error::Divergence { tau, tau_min, .. } => Error::Divergence {
                coordinate: Some(k),
                tau,
                tau_min,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Pops,
    Memory,
    Threshold,
}

impl std::fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BudgetKind::Pops => f.write_str("heap-pop limit"),
            BudgetKind::Memory => f.write_str("memory cap"),
            BudgetKind::Threshold => f.write_str("threshold beyond pop limit"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
