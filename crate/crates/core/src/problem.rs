//! JSON problem files: the serialized form of a Cauchy problem consumed by
//! the command-line front end.
//!
//! The key set is closed (unknown keys are rejected rather than ignored)
//! and everything is validated on build: the parsed Ψ expression must be
//! y-free and abs-free (Ψ has to be C¹), its symbolic derivative must be
//! positive on the construction sample, and all Order/CauchyProblem
//! invariants apply.

use serde::{Deserialize, Serialize};

use crate::expr::{self, Ast};
use crate::funcspace::{make_grid, Grid, Order, PsiMap};
use crate::solver::CauchyProblem;
use crate::{Error, Result};

pub const DEFAULT_GRID_N: usize = 1024;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    /// Grading exponent; defaults to max(1, 1/ρ).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: DEFAULT_GRID_N,
            grading: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Serialized Cauchy problem.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Ψ(t) as an expression in t.
    pub psi: String,
    pub mu: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    /// Initial datum y_a of I^{1−ρ;Ψ}y(a) = y_a.
    pub ya: f64,
    /// Right-hand side f(t, y).
    pub f: String,
    pub lipschitz: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl ProblemFile {
    /// Parses from JSON; errors carry the serde position diagnostic.
    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src)
            .map_err(|e| Error::InvalidArgument(format!("problem file: {e}")))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    /// The worked example: μ = ν = 1/2, y_a = 2, f = 4y, Ψ = t on `[0,1]`.
    pub fn example() -> Self {
        Self {
            psi: "t".into(),
            mu: 0.5,
            nu: 0.5,
            a: 0.0,
            b: 1.0,
            ya: 2.0,
            f: "4*y".into(),
            lipschitz: 4.0,
            grid: GridSpec::default(),
            solver: SolverSpec::default(),
        }
    }

    /// Validates and builds the runnable problem plus its grid.
    pub fn build(&self) -> Result<(CauchyProblem, Grid)> {
        let order = Order::new(self.mu, self.nu)?;
        let psi = build_psi(&self.psi, self.a, self.b)?;
        let f_ast = expr::parse(&self.f)?;
        let rhs = move |t: f64, y: f64| expr::eval(&f_ast, t, Some(y)).unwrap_or(f64::NAN);
        let problem = CauchyProblem::new(order, psi.clone(), self.ya, rhs, self.lipschitz)?;
        if self.grid.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid.n = {} must be >= 2",
                self.grid.n
            )));
        }
        let grading = match self.grid.grading {
            Some(r) => r,
            None => (1.0 / order.rho()).max(1.0),
        };
        let grid = make_grid(&psi, self.grid.n, grading)?;
        if !(self.solver.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "solver.tol = {} must be > 0",
                self.solver.tol
            )));
        }
        if self.solver.max_iter == 0 {
            return Err(Error::InvalidArgument("solver.max_iter must be >= 1".into()));
        }
        Ok((problem, grid))
    }
}

/// Builds a validated [`PsiMap`] from an expression in t. This is the
/// Ψ-admissibility gate: the expression must be y-free and abs-free, and
/// its symbolic derivative must evaluate positive on the whole sample.
pub fn build_psi(src: &str, a: f64, b: f64) -> Result<PsiMap> {
    let ast = expr::parse(src)?;
    if ast.contains_y() {
        return Err(Error::InvalidArgument(
            "psi must be a function of t only".into(),
        ));
    }
    if ast.contains_abs() {
        return Err(Error::InvalidArgument(
            "abs is not allowed inside psi (psi must be C^1)".into(),
        ));
    }
    let dast = expr::differentiate(&ast)?;
    let psi_ast: Ast = ast;
    let dpsi_ast: Ast = dast;
    PsiMap::new(
        move |t| expr::eval(&psi_ast, t, None).unwrap_or(f64::NAN),
        move |t| expr::eval(&dpsi_ast, t, None).unwrap_or(f64::NAN),
        a,
        b,
    )
}
