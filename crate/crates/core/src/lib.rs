//! Numerical toolkit for Ψ-Hilfer fractional Cauchy problems.
//!
//! Solves
//!
//! ```text
//! D^{μ,ν;Ψ} y(t) = f(t, y(t)),   t ∈ (a,b],   0 < μ < 1,  0 ≤ ν ≤ 1,
//! I^{1−ρ;Ψ} y(a) = y_a,          ρ = μ + ν − μν,
//! ```
//!
//! by Picard successive approximation of the equivalent weakly singular
//! Volterra integral equation, working throughout in the weighted space
//! C_{1−ρ;Ψ} where solutions are bounded. On top of the solver it computes
//! Ulam–Hyers / Ulam–Hyers–Rassias stability constants, certifies
//! ε-approximate solutions against their integral-form residual, and
//! evaluates the Gronwall-series distance bound between two approximate
//! solutions.
//!
//! Module map:
//!
//! * [`special`]: gamma and Mittag-Leffler functions
//! * [`funcspace`]: the weighted space, graded grids, weight/Ω factors
//! * [`fracops`]: Ψ-fractional integral and Ψ-Hilfer derivative as grid operators
//! * [`solver`]: Picard solver for the Cauchy problem
//! * [`stability`]: stability constants and certificates
//! * [`expr`]: expression language for user-supplied f(t,y) and Ψ(t)
//! * [`problem`]: JSON problem files consumed by the CLI

pub mod expr;
pub mod fracops;
pub mod funcspace;
pub mod problem;
pub mod solver;
pub mod special;
pub mod stability;

pub use funcspace::{Grid, Order, PsiMap, WeightedFunction};
pub use solver::{CauchyProblem, SolveReport};
pub use stability::{PhiFunction, StabilityCertificate, StabilityKind};

use solver::SolveReport as Report;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or partial sum exceeded the floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Structurally invalid argument (bad sizes, non-finite input, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Two grid-bound objects do not share the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A theorem hypothesis is violated; the requested bound does not apply.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    /// Expression parsing or evaluation failed.
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    /// Picard iteration hit `max_iter` with the gap still above tolerance.
    /// Carries the last iterate and the full gap history.
    #[error("no convergence after {} iterations (last gap {:.3e})",
            .0.iterations, .0.gap_history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence(Box<Report>),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
