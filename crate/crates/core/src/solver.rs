//! Picard successive approximation for the Ψ-Hilfer Cauchy problem.
//!
//! The problem is solved through its equivalent integral equation
//!
//! ```text
//! y(t) = Ω_Ψ^ρ(t,a) y_a + I^{μ;Ψ} f(·, y(·))(t),
//! ```
//!
//! iterated as y_n = Ω y_a + I^{μ;Ψ} f(·, y_{n−1}) starting from the
//! homogeneous term y_0 = Ω y_a (whose weighted form is the constant
//! y_a/Γ(ρ)). All iterates live in weighted storage; convergence is
//! measured with the discrete C_{1−ρ;Ψ} norm of the gap between
//! consecutive iterates, relative to the iterate scale.

use std::sync::Arc;

use crate::fracops::FracIntegralOp;
use crate::funcspace::{weighted_norm, Grid, Order, PsiMap, WeightedFunction};
use crate::special::{gamma_fn, ln_gamma, mittag_leffler2, MLParams};
use crate::{Error, Result};

type Rhs = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The Cauchy problem data: order, coordinate map, initial datum y_a
/// (measured by I^{1−ρ;Ψ}y(a)), right-hand side f(t,y) and its Lipschitz
/// constant in y.
#[derive(Clone)]
pub struct CauchyProblem {
    order: Order,
    psi: PsiMap,
    y_a: f64,
    rhs: Rhs,
    lipschitz: f64,
}

impl std::fmt::Debug for CauchyProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CauchyProblem")
            .field("order", &self.order)
            .field("psi", &self.psi)
            .field("y_a", &self.y_a)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl CauchyProblem {
    pub fn new<F>(order: Order, psi: PsiMap, y_a: f64, rhs: F, lipschitz: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !y_a.is_finite() {
            return Err(Error::InvalidArgument(format!("y_a = {y_a} is not finite")));
        }
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant L = {lipschitz} must be > 0"
            )));
        }
        Ok(Self {
            order,
            psi,
            y_a,
            rhs: Arc::new(rhs),
            lipschitz,
        })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn psi(&self) -> &PsiMap {
        &self.psi
    }

    pub fn y_a(&self) -> f64 {
        self.y_a
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn rhs(&self, t: f64, y: f64) -> f64 {
        (self.rhs)(t, y)
    }

    /// Same problem with a different initial datum.
    pub fn with_initial(&self, y_a: f64) -> Result<Self> {
        if !y_a.is_finite() {
            return Err(Error::InvalidArgument(format!("y_a = {y_a} is not finite")));
        }
        let mut p = self.clone();
        p.y_a = y_a;
        Ok(p)
    }
}

/// Outcome of a Picard solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Converged (or last, on non-convergence) iterate in weighted form.
    pub solution: WeightedFunction,
    /// Number of Picard iterations performed.
    pub iterations: usize,
    /// ‖y_n − y_{n−1}‖ in the weighted norm, one entry per iteration.
    pub gap_history: Vec<f64>,
    /// Scale-normalized fixed-point defect ‖Ty − y‖ / (1 + ‖y‖).
    pub residual: f64,
    /// Smallest j making T^j a contraction on the whole interval.
    pub contraction_j: usize,
}

/// One application of the Picard map T in weighted form.
fn picard_map(
    problem: &CauchyProblem,
    grid: &Grid,
    op: &FracIntegralOp,
    raw_weight: &[f64],
    inv_raw_weight: &[f64],
    w0: f64,
    w: &WeightedFunction,
) -> Result<WeightedFunction> {
    let n = grid.n();
    let nodes = grid.nodes();
    let mut fw = vec![0.0; n + 1];
    for j in 1..=n {
        let y = w.w()[j] * raw_weight[j];
        let f = problem.rhs(nodes[j], y);
        if !f.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rhs returned a non-finite value at t = {}",
                nodes[j]
            )));
        }
        fw[j] = f * inv_raw_weight[j];
    }
    let fw = WeightedFunction::from_weighted_samples(grid.clone(), problem.order(), fw)?;
    let mut next = op.apply(&fw)?;
    for v in next.w_mut().iter_mut() {
        *v += w0;
    }
    next.w_mut()[0] = w0;
    Ok(next)
}

/// Solves the Cauchy problem on `grid` by successive approximation.
///
/// Stops when ‖y_n − y_{n−1}‖ ≤ tol·(1 + ‖y_n‖); the absolute gap is kept in
/// `gap_history`. On `max_iter` exhaustion returns [`Error::NoConvergence`]
/// carrying the full report for diagnostics.
pub fn picard_solve(
    problem: &CauchyProblem,
    grid: &Grid,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be > 0")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let psi = problem.psi();
    let u = grid.psi_nodes();
    if (u[0] - psi.eval(psi.a())).abs() > 1e-12 * (1.0 + u[0].abs())
        || (u[grid.n()] - psi.eval(psi.b())).abs() > 1e-12 * (1.0 + u[grid.n()].abs())
    {
        return Err(Error::GridMismatch(
            "grid psi-nodes do not match the problem's psi interval".into(),
        ));
    }
    let order = problem.order();
    let rho = order.rho();
    let n = grid.n();
    let op = FracIntegralOp::new(order.mu(), order, grid)?;

    let mut raw_weight = vec![0.0; n + 1]; // (u_j - u_0)^{rho-1}
    let mut inv_raw_weight = vec![0.0; n + 1]; // (u_j - u_0)^{1-rho}
    for j in 1..=n {
        raw_weight[j] = (u[j] - u[0]).powf(rho - 1.0);
        inv_raw_weight[j] = (u[j] - u[0]).powf(1.0 - rho);
    }

    let w0 = problem.y_a() / gamma_fn(rho)?;
    let mut current = WeightedFunction::from_weighted_samples(grid.clone(), order, vec![w0; n + 1])?;
    let contraction_j = contraction_iterate_count(problem);
    let mut gap_history = Vec::new();

    for iteration in 1..=max_iter {
        let next = picard_map(problem, grid, &op, &raw_weight, &inv_raw_weight, w0, &current)?;
        let gap = current
            .w()
            .iter()
            .zip(next.w())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        gap_history.push(gap);
        current = next;
        if gap <= tol * (1.0 + weighted_norm(&current)) {
            let once_more =
                picard_map(problem, grid, &op, &raw_weight, &inv_raw_weight, w0, &current)?;
            let defect = current
                .w()
                .iter()
                .zip(once_more.w())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let residual = defect / (1.0 + weighted_norm(&current));
            return Ok(SolveReport {
                solution: current,
                iterations: iteration,
                gap_history,
                residual,
                contraction_j,
            });
        }
    }
    let once_more = picard_map(problem, grid, &op, &raw_weight, &inv_raw_weight, w0, &current)?;
    let defect = current
        .w()
        .iter()
        .zip(once_more.w())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let residual = defect / (1.0 + weighted_norm(&current));
    Err(Error::NoConvergence(Box::new(SolveReport {
        solution: current,
        iterations: max_iter,
        gap_history,
        residual,
        contraction_j,
    })))
}

/// Smallest j ≥ 1 with Γ(ρ)·(L(Ψ(b)−Ψ(a))^μ)^j / Γ(jμ+ρ) < 1, i.e. the
/// iterate count that makes T^j a contraction. Terminates for every valid
/// problem since the factor tends to 0.
pub fn contraction_iterate_count(problem: &CauchyProblem) -> usize {
    let order = problem.order();
    let rho = order.rho();
    let mu = order.mu();
    let ln_rate = (problem.lipschitz() * problem.psi().total_delta().powf(mu)).ln();
    let ln_gamma_rho = ln_gamma(rho).expect("rho in (0,1]");
    let mut j = 1usize;
    loop {
        let ln_factor = ln_gamma_rho + j as f64 * ln_rate
            - ln_gamma(j as f64 * mu + rho).expect("positive argument");
        if ln_factor < 0.0 {
            return j;
        }
        j += 1;
    }
}

/// Contraction factor Γ(ρ)·(L(Ψ(b)−Ψ(a))^μ)^j / Γ(jμ+ρ) at a given j.
pub fn contraction_factor(problem: &CauchyProblem, j: usize) -> f64 {
    let order = problem.order();
    let mu = order.mu();
    let ln_rate = (problem.lipschitz() * problem.psi().total_delta().powf(mu)).ln();
    (ln_gamma(order.rho()).expect("rho in (0,1]") + j as f64 * ln_rate
        - ln_gamma(j as f64 * mu + order.rho()).expect("positive argument"))
    .exp()
}

/// A-priori bound on the j-th successive-approximation gap for an
/// ε-residual start:
/// (ε/L)·(L(Ψ(t)−Ψ(a))^μ)^j / Γ(jμ+1) · (Ψ(t)−Ψ(a))^{1−ρ}.
pub fn apriori_gap_bound(
    problem: &CauchyProblem,
    eps: f64,
    j: usize,
    t: f64,
) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be >= 0")));
    }
    if j == 0 {
        return Err(Error::InvalidArgument("j must be >= 1".into()));
    }
    let psi = problem.psi();
    if !psi.contains(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside [{}, {}]",
            psi.a(),
            psi.b()
        )));
    }
    if eps == 0.0 || t == psi.a() {
        return Ok(0.0);
    }
    let order = problem.order();
    let delta = psi.delta(t);
    let ln_val = (j as f64) * (problem.lipschitz() * delta.powf(order.mu())).ln()
        - ln_gamma(j as f64 * order.mu() + 1.0)?;
    Ok(eps / problem.lipschitz() * ln_val.exp() * delta.powf(1.0 - order.rho()))
}

/// Raw closed-form solution of the worked example
/// (μ = ν = 1/2, y_a = 2, f = 4y on the Ψ-interval [Ψ(a), Ψ(b)]):
/// y(t) = 2(Ψ(t)−Ψ(a))^{−1/4} E_{1/2,3/4}(4(Ψ(t)−Ψ(a))^{1/2}).
pub fn example_closed_form(psi: &PsiMap, t: f64) -> Result<f64> {
    if !psi.contains(t) || t == psi.a() {
        return Err(Error::Domain(format!(
            "closed form defined on ({}, {}], got t = {t}",
            psi.a(),
            psi.b()
        )));
    }
    let d = psi.delta(t);
    Ok(d.powf(-0.25) * example_closed_form_weighted(psi, t)?)
}

/// Weighted form of the example's closed-form solution:
/// w(t) = 2 E_{1/2,3/4}(4(Ψ(t)−Ψ(a))^{1/2}); continuous down to t = a where
/// it equals 2/Γ(3/4).
pub fn example_closed_form_weighted(psi: &PsiMap, t: f64) -> Result<f64> {
    if !psi.contains(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside [{}, {}]",
            psi.a(),
            psi.b()
        )));
    }
    let params = MLParams::new(0.5, 0.75)?;
    Ok(2.0 * mittag_leffler2(params, 4.0 * psi.delta(t).sqrt())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::make_grid;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn example_problem() -> CauchyProblem {
        let order = Order::new(0.5, 0.5).unwrap();
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        CauchyProblem::new(order, psi, 2.0, |_t, y| 4.0 * y, 4.0).unwrap()
    }

    #[test]
    fn zero_rhs_converges_in_one_iteration() {
        let order = Order::new(0.5, 0.5).unwrap();
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let p = CauchyProblem::new(order, psi.clone(), 2.0, |_, _| 0.0, 1.0).unwrap();
        let grid = make_grid(&psi, 64, 1.0).unwrap();
        let report = picard_solve(&p, &grid, 1e-10, 50).unwrap();
        assert_eq!(report.iterations, 1);
        let expect = 2.0 / gamma_fn(0.75).unwrap();
        for &w in report.solution.w() {
            assert_eq!(w, expect);
        }
    }

    #[test]
    fn constant_rhs_matches_power_rule_solution() {
        // y_a = 0, f = c: y(t) = c (psi-psia)^mu / Gamma(mu+1).
        let order = Order::new(0.5, 0.5).unwrap();
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let c = 2.0;
        let p = CauchyProblem::new(order, psi.clone(), 0.0, move |_, _| c, 1.0).unwrap();
        let n = 256;
        let grid = make_grid(&psi, n, 1.0 / order.rho()).unwrap();
        let report = picard_solve(&p, &grid, 1e-12, 50).unwrap();
        assert!(report.iterations <= 2);
        let u = grid.psi_nodes();
        let coef = c / gamma_fn(1.5).unwrap();
        for j in (n / 8)..=n {
            let expect = coef * (u[j] - u[0]).powf(0.5) * (u[j] - u[0]).powf(0.25);
            assert!(
                rel(report.solution.w()[j], expect) < 5e-3,
                "node {j}: {} vs {expect}",
                report.solution.w()[j]
            );
        }
    }

    #[test]
    fn example_solve_small_grid() {
        let p = example_problem();
        let grid = make_grid(p.psi(), 512, 1.0 / p.order().rho()).unwrap();
        let report = picard_solve(&p, &grid, 1e-12, 300).unwrap();
        // iterate w_0 stays pinned to y_a / Gamma(rho) exactly
        assert_eq!(report.solution.w0(), 2.0 / gamma_fn(0.75).unwrap());
        let mut worst = 0.0_f64;
        for (j, &t) in grid.nodes().iter().enumerate().skip(1) {
            let expect = example_closed_form_weighted(p.psi(), t).unwrap();
            worst = worst.max((report.solution.w()[j] - expect).abs() / expect.max(1.0));
        }
        assert!(worst < 5e-3, "closed-form deviation {worst}");
        // fixed-point property: residual (scale-normalized) <= 2 tol
        assert!(report.residual <= 2.0 * 1e-12, "residual {}", report.residual);
    }

    #[test]
    fn grid_refinement_order_at_least_one() {
        let p = example_problem();
        let r = 1.0 / p.order().rho();
        let solve = |n: usize| {
            let grid = make_grid(p.psi(), n, r).unwrap();
            picard_solve(&p, &grid, 1e-12, 300).unwrap().solution
        };
        let (s1, s2, s4) = (solve(128), solve(256), solve(512));
        // graded nodes nest under doubling: t_j^(N) = t_{2j}^(2N)
        let dist = |coarse: &WeightedFunction, fine: &WeightedFunction| {
            coarse
                .w()
                .iter()
                .enumerate()
                .fold(0.0_f64, |m, (j, &w)| m.max((w - fine.w()[2 * j]).abs()))
        };
        let e1 = dist(&s1, &s2);
        let e2 = dist(&s2, &s4);
        let order = (e1 / e2).log2();
        assert!(order >= 1.0, "empirical order {order} (gaps {e1:.3e}, {e2:.3e})");
    }

    #[test]
    fn nonconvergence_reports_history() {
        let p = example_problem();
        let grid = make_grid(p.psi(), 64, 1.0 / p.order().rho()).unwrap();
        match picard_solve(&p, &grid, 1e-12, 3) {
            Err(Error::NoConvergence(report)) => {
                assert_eq!(report.iterations, 3);
                assert_eq!(report.gap_history.len(), 3);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn rhs_nan_is_reported() {
        let order = Order::new(0.5, 0.5).unwrap();
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let p = CauchyProblem::new(order, psi.clone(), 1.0, |_, _| f64::NAN, 1.0).unwrap();
        let grid = make_grid(&psi, 16, 1.0).unwrap();
        assert!(matches!(
            picard_solve(&p, &grid, 1e-8, 5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn contraction_count_examples() {
        // L = 0.1 on the example geometry: the j = 1 factor is already < 1.
        let order = Order::new(0.5, 0.5).unwrap();
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let p = CauchyProblem::new(order, psi.clone(), 2.0, |_, y| 0.1 * y, 0.1).unwrap();
        assert_eq!(contraction_iterate_count(&p), 1);
        // worked example: first j with Gamma(3/4) 4^j / Gamma(j/2+3/4) < 1 is 84
        let p6 = example_problem();
        let j = contraction_iterate_count(&p6);
        assert_eq!(j, 84);
        assert!(contraction_factor(&p6, j) < 1.0);
        assert!(contraction_factor(&p6, j - 1) >= 1.0);
        // L -> 0+
        let tiny = CauchyProblem::new(order, psi, 2.0, |_, y| 1e-12 * y, 1e-12).unwrap();
        assert_eq!(contraction_iterate_count(&tiny), 1);
    }

    #[test]
    fn apriori_bound_examples() {
        let order = Order::new(0.5, 0.5).unwrap();
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let l = 1.0;
        let p = CauchyProblem::new(order, psi, 2.0, move |_, y| l * y, l).unwrap();
        // j = 1, eps = L at t = 1: 1/Gamma(3/2)
        let got = apriori_gap_bound(&p, l, 1, 1.0).unwrap();
        assert!(rel(got, 1.0 / gamma_fn(1.5).unwrap()) < 1e-13);
        assert_eq!(apriori_gap_bound(&p, l, 3, 0.0).unwrap(), 0.0);
        assert_eq!(apriori_gap_bound(&p, 0.0, 5, 0.7).unwrap(), 0.0);
        assert!(apriori_gap_bound(&p, -1.0, 1, 0.5).is_err());
        assert!(apriori_gap_bound(&p, 1.0, 0, 0.5).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        // weighted value at psi-delta 1: 2 E_{1/2,3/4}(4)
        let wb = example_closed_form_weighted(&psi, 1.0).unwrap();
        assert!(rel(wb, 2.0 * 35544442.02787793) < 1e-12);
        // weighted limit at t -> 0+: 2/Gamma(3/4)
        let w0 = example_closed_form_weighted(&psi, 0.0).unwrap();
        assert!(rel(w0, 1.632_097_878_196_526) < 1e-13);
        // raw value at psi-delta 1/16: (1/16)^{-1/4} = 2 times weighted at z = 1
        let raw = example_closed_form(&psi, 1.0 / 16.0).unwrap();
        assert!(rel(raw, 4.0 * 5.361176259058833) < 1e-12);
        assert!(example_closed_form(&psi, 0.0).is_err());
    }
}
