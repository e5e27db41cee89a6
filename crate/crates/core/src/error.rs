use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// The requested grid exceeds the configured cell budget.
    #[error("grid of {cells} cells exceeds the cap of {cap} cells")]
    CapExceeded { cells: u128, cap: u64 },

    #[error("grid point (n={n}, g={g}) outside table bounds (n_max={n_max}, g_max={g_max})")]
    OutOfBounds {
        n: usize,
        g: usize,
        n_max: usize,
        g_max: usize,
    },

    #[error("logarithm of a nonpositive value")]
    NonPositive,

    /// An argument is outside the domain of a function.
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("enumeration guard exceeded: d={d}, k={k} (limits d <= {max_d}, k <= {max_k})")]
    GuardExceeded {
        d: usize,
        k: usize,
        max_d: usize,
        max_k: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Fewer points than a fit requires.
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("fit quantity is identically zero")]
    ZeroQuantity,

    /// The least-squares system has no unique solution.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
