//! Exact values, asymptotic profiles and convergence diagnostics for
//! one-part monotone Hurwitz numbers `E(n, g)`.
//!
//! - [`exact`]: the genus-raising recurrence over exact rationals.
//! - [`oracle`]: independent enumeration of monotone factorizations.
//! - [`asym`]: the `lambda <-> theta` inversion and derived functions.
//! - [`omega`]: the closed-form candidate `Omega(n, g)` in log space.
//! - [`harness`]: ratio diagnostics, decay fits and limit studies.

pub mod asym;
pub mod error;
pub mod exact;
pub mod harness;
pub mod omega;
pub mod oracle;

pub use asym::{AsymPoint, Extended, PrecisionConfig};
pub use error::{Error, Result};
pub use exact::{build_table, build_table_with, ExactTable, ExactValue, FillStrategy, GridPoint};
pub use harness::{AssumptionReport, ConvergenceRecord, HarnessConfig, SlopeFit};
pub use omega::{log_omega, BoundaryNormalization, LogOmega, OmegaBranch, OmegaConfig};
pub use oracle::{oracle_e, Normalization};

pub use rug;
