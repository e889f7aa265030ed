//! Ulam–Hyers / Ulam–Hyers–Rassias stability constants and certificates.
//!
//! The certificates check the *integral-form* consequence of the
//! ε-approximate-solution inequality |D^{μ,ν;Ψ}y* − f(t,y*)| ≤ ε (resp.
//! ≤ εφ): applying I^{μ;Ψ} to both sides yields, pointwise,
//!
//! ```text
//! |y*(t) − y*_a Ω_Ψ^ρ(t,a) − I^{μ;Ψ}f(·,y*)(t)| ≤ ε (Ψ(t)−Ψ(a))^μ / Γ(μ+1)
//! ```
//!
//! which is exactly the inequality the stability proofs consume. The
//! residual on the left is evaluated in weighted form (the only form in
//! which grid data exists); the Ψ-Hilfer derivative of the candidate is
//! never evaluated numerically. λ for the Rassias variant is certified at
//! the grid nodes only: between-node behavior is not verified.

use serde::Serialize;

use crate::fracops::FracIntegralOp;
use crate::funcspace::{Grid, PsiMap, WeightedFunction};
use crate::solver::{picard_solve, CauchyProblem};
use crate::special::{gamma_fn, ln_gamma, mittag_leffler};
use crate::{Error, Result};

/// Node margins below −1e-9 flip a certificate verdict to false.
pub const MARGIN_SLACK: f64 = 1e-9;

const DISTANCE_SOLVE_TOL: f64 = 1e-10;
const DISTANCE_SOLVE_MAX_ITER: usize = 200;
const SERIES_TERM_CAP: usize = 10_000;

/// Which stability notion a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityKind {
    Hu,
    GeneralizedHu,
    Hur,
    GeneralizedHur,
}

/// Residual comparison profile for [`residual_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    /// |residual| ≤ ε (Ψ(t)−Ψ(a))^μ/Γ(μ+1)
    Constant,
    /// |residual| ≤ ε I^{μ;Ψ}φ(t)
    PhiScaled,
}

/// Outcome of a stability check.
///
/// `constant` is the scalar multiplying ε in the governing bound,
/// `bound_profile` the per-node bound values, `margins` the per-node
/// bound − observed values; `verdict` is true iff every margin is
/// ≥ −[`MARGIN_SLACK`]. `observed` and `bound` summarize both sides.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityCertificate {
    pub kind: StabilityKind,
    pub epsilon: f64,
    pub constant: f64,
    pub bound: f64,
    pub observed: f64,
    pub verdict: bool,
    pub bound_profile: Vec<f64>,
    pub margins: Vec<f64>,
}

impl StabilityCertificate {
    fn from_profiles(
        kind: StabilityKind,
        epsilon: f64,
        constant: f64,
        bound_profile: Vec<f64>,
        observed_profile: &[f64],
    ) -> Self {
        let margins: Vec<f64> = bound_profile
            .iter()
            .zip(observed_profile)
            .map(|(b, o)| b - o)
            .collect();
        let verdict = margins.iter().all(|&m| m >= -MARGIN_SLACK);
        let observed = observed_profile.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let bound = bound_profile.iter().fold(0.0_f64, |m, v| m.max(*v));
        Self {
            kind,
            epsilon,
            constant,
            bound,
            observed,
            verdict,
            bound_profile,
            margins,
        }
    }
}

/// Comparison function φ for the Rassias-type notions: positive and
/// nondecreasing on the grid nodes.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    values: Vec<f64>,
}

impl PhiFunction {
    /// Values must be finite, nondecreasing, and positive away from the
    /// left endpoint; φ(a) = 0 is allowed (e.g. φ = t with a = 0; the node
    /// never enters a ratio).
    pub fn on_grid(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() + 1 {
            return Err(Error::InvalidArgument(format!(
                "phi needs {} node values, got {}",
                grid.n() + 1,
                values.len()
            )));
        }
        for (j, &v) in values.iter().enumerate() {
            let ok = v.is_finite() && (v > 0.0 || (j == 0 && v == 0.0));
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "phi must be positive (zero allowed only at t = a); node {j} has {v}"
                )));
            }
        }
        if values.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidArgument(
                "phi must be nondecreasing along the grid".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> Result<Self> {
        Self::on_grid(grid, grid.nodes().iter().map(|&t| f(t)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nondecreasing(&self) -> bool {
        true // enforced at construction
    }
}

/// Theorem constant C_f = ((E_μ(L(Ψ(b)−Ψ(a))^μ) − 1)/L)·(Ψ(b)−Ψ(a))^{1−ρ}
/// of the Ulam–Hyers bound ‖y*−y‖ ≤ C_f ε.
pub fn hu_constant(problem: &CauchyProblem) -> Result<f64> {
    let order = problem.order();
    let l = problem.lipschitz();
    let d = problem.psi().total_delta();
    let e = mittag_leffler(order.mu(), l * d.powf(order.mu()))?;
    Ok((e - 1.0) / l * d.powf(1.0 - order.rho()))
}

/// The generalized-HU comparison function Ψ_f(ε) = hu_constant·ε,
/// with Ψ_f(0) = 0.
pub fn generalized_hu_bound(problem: &CauchyProblem, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    Ok(hu_constant(problem)? * epsilon)
}

/// Grid-certified λ̂ = max_{j≥1} |I^{μ;Ψ}φ(t_j)| / φ(t_j): the smallest λ
/// with I^{μ;Ψ}φ ≤ λφ verifiable at the nodes.
pub fn estimate_lambda(
    problem: &CauchyProblem,
    phi: &PhiFunction,
    grid: &Grid,
) -> Result<f64> {
    let order = problem.order();
    let rho = order.rho();
    let u = grid.psi_nodes();
    let n = grid.n();
    if phi.values().len() != n + 1 {
        return Err(Error::GridMismatch("phi not sampled on this grid".into()));
    }
    let mut w = vec![0.0; n + 1];
    w[0] = if rho == 1.0 { phi.values()[0] } else { 0.0 };
    for j in 1..=n {
        w[j] = phi.values()[j] * (u[j] - u[0]).powf(1.0 - rho);
    }
    let wrapped = WeightedFunction::from_weighted_samples(grid.clone(), order, w)?;
    let integral = FracIntegralOp::new(order.mu(), order, grid)?.apply(&wrapped)?;
    let mut lambda = 0.0_f64;
    for j in 1..=n {
        let raw = integral.w()[j] * (u[j] - u[0]).powf(rho - 1.0);
        lambda = lambda.max(raw.abs() / phi.values()[j]);
    }
    Ok(lambda)
}

/// Theorem constant (λ/(1−λL))·(Ψ(b)−Ψ(a))^{1−ρ} of the HUR bound.
/// Errors when the hypothesis 0 < λL < 1 fails rather than extrapolating.
pub fn hur_constant(problem: &CauchyProblem, lambda: f64) -> Result<f64> {
    let ll = lambda * problem.lipschitz();
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be > 0")));
    }
    if ll >= 1.0 {
        return Err(Error::HypothesisViolation(format!(
            "lambda*L = {ll} >= 1: the Rassias stability theorem does not apply"
        )));
    }
    Ok(lambda / (1.0 - ll) * problem.psi().total_delta().powf(1.0 - problem.order().rho()))
}

/// Certifies the integral-form residual of a candidate y* at every node:
/// weighted |y* − y*_a Ω − I^{μ;Ψ}f(·,y*)| against ε(Ψ(t)−Ψ(a))^μ/Γ(μ+1)
/// (or ε·I^{μ;Ψ}φ(t) for the φ-scaled kind). The candidate's initial datum
/// is read off its weighted limit: y*_a = Γ(ρ)·w_0.
pub fn residual_certificate(
    problem: &CauchyProblem,
    candidate: &WeightedFunction,
    epsilon: f64,
    kind: ResidualKind,
    phi: Option<&PhiFunction>,
) -> Result<StabilityCertificate> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    if candidate.order() != problem.order() {
        return Err(Error::InvalidArgument(
            "candidate order differs from the problem order".into(),
        ));
    }
    let grid = candidate.grid();
    check_grid_matches_psi(grid, problem.psi())?;
    let order = problem.order();
    let (mu, rho) = (order.mu(), order.rho());
    let n = grid.n();
    let u = grid.psi_nodes();
    let nodes = grid.nodes();

    // I^{mu} f(., y*) in weighted form.
    let mut fw = vec![0.0; n + 1];
    for j in 1..=n {
        let y = candidate.w()[j] * (u[j] - u[0]).powf(rho - 1.0);
        let f = problem.rhs(nodes[j], y);
        if !f.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rhs returned a non-finite value at t = {}",
                nodes[j]
            )));
        }
        fw[j] = f * (u[j] - u[0]).powf(1.0 - rho);
    }
    let op = FracIntegralOp::new(mu, order, grid)?;
    let integral =
        op.apply(&WeightedFunction::from_weighted_samples(grid.clone(), order, fw)?)?;

    // Weighted residual profile; the homogeneous term is the constant w_0.
    let w0 = candidate.w0();
    let observed: Vec<f64> = (0..=n)
        .map(|j| (candidate.w()[j] - w0 - integral.w()[j]).abs())
        .collect();

    let inv_gamma_mu1 = 1.0 / gamma_fn(mu + 1.0)?;
    let (cert_kind, constant, bound_profile) = match kind {
        ResidualKind::Constant => {
            let profile: Vec<f64> = (0..=n)
                .map(|j| epsilon * (u[j] - u[0]).powf(mu) * inv_gamma_mu1)
                .collect();
            let constant = problem.psi().total_delta().powf(mu) * inv_gamma_mu1;
            (StabilityKind::Hu, constant, profile)
        }
        ResidualKind::PhiScaled => {
            let phi = phi.ok_or_else(|| {
                Error::InvalidArgument("phi-scaled residual check needs a phi function".into())
            })?;
            if phi.values().len() != n + 1 {
                return Err(Error::GridMismatch("phi not sampled on this grid".into()));
            }
            let mut wphi = vec![0.0; n + 1];
            wphi[0] = if rho == 1.0 { phi.values()[0] } else { 0.0 };
            for j in 1..=n {
                wphi[j] = phi.values()[j] * (u[j] - u[0]).powf(1.0 - rho);
            }
            let iphi = op.apply(&WeightedFunction::from_weighted_samples(
                grid.clone(),
                order,
                wphi,
            )?)?;
            let mut profile = vec![0.0; n + 1];
            let mut constant = 0.0_f64;
            for j in 1..=n {
                let raw = iphi.w()[j] * (u[j] - u[0]).powf(rho - 1.0);
                profile[j] = epsilon * raw;
                constant = constant.max(raw);
            }
            (StabilityKind::Hur, constant, profile)
        }
    };

    Ok(StabilityCertificate::from_profiles(
        cert_kind,
        epsilon,
        constant,
        bound_profile,
        &observed,
    ))
}

/// Series bound of the ε-approximation distance theorem (and its
/// truncation bookkeeping).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DpdnBound {
    /// The full bound on ‖y₁* − y₂*‖ in the weighted norm.
    pub total: f64,
    /// Multiplier of (ε₁+ε₂).
    pub eps_coefficient: f64,
    /// Multiplier of |y_a⁽¹⁾ − y_a⁽²⁾|.
    pub data_coefficient: f64,
    /// Terms taken in the (ε₁+ε₂) series before the tail rule fired.
    pub eps_series_terms: usize,
    /// Terms taken in the initial-data series.
    pub data_series_terms: usize,
    /// Ratio-test bound on the truncated tail of the ε series.
    pub eps_tail_bound: f64,
    /// Ratio-test bound on the truncated tail of the data series.
    pub data_tail_bound: f64,
}

/// Distance bound between two εᵢ-approximate solutions with initial data
/// y_a⁽ⁱ⁾:
///
/// ```text
/// (ε₁+ε₂)[ ΔΨ^{μ−ρ+1}/Γ(μ+1) + Σ_{k≥1} L^k ΔΨ^{(k+1)μ}/Γ((k+1)μ−ρ+1) ]
///   + |y_a⁽¹⁾−y_a⁽²⁾|[ 1/Γ(ρ) + Σ_{k≥1} L^k ΔΨ^{kμ}/Γ(ρ+kμ) ]
/// ```
///
/// with each series truncated once the next term is < tail_tol·(1+partial).
/// ε₁ = ε₂ = 0 specializes to the initial-data dependence bound, and equal
/// data then gives 0 (uniqueness).
pub fn eps_approx_bound(
    problem: &CauchyProblem,
    eps1: f64,
    eps2: f64,
    ya1: f64,
    ya2: f64,
    tail_tol: f64,
) -> Result<DpdnBound> {
    if !(eps1 >= 0.0) || !(eps2 >= 0.0) {
        return Err(Error::InvalidArgument("eps1 and eps2 must be >= 0".into()));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tail_tol = {tail_tol} must be > 0")));
    }
    let order = problem.order();
    let (mu, rho) = (order.mu(), order.rho());
    let l = problem.lipschitz();
    let d = problem.psi().total_delta();
    let ln_l = l.ln();
    let ln_d = d.ln();

    // Terms of both series in log space: L^k ΔΨ^{p(k)} / Γ(g(k)).
    let term = |k: f64, pow_exp: f64, gamma_arg: f64| -> Result<f64> {
        Ok((k * ln_l + pow_exp * ln_d - ln_gamma(gamma_arg)?).exp())
    };
    // Sums head + Σ_{k≥1} term(k), truncating on the tail rule; also returns
    // the term count and a ratio-test bound on the dropped tail.
    let sum_series = |head: f64,
                      pow_exp: &dyn Fn(f64) -> f64,
                      gamma_arg: &dyn Fn(f64) -> f64|
     -> Result<(f64, usize, f64)> {
        let mut sum = head;
        for k in 1..=SERIES_TERM_CAP {
            let kf = k as f64;
            let t = term(kf, pow_exp(kf), gamma_arg(kf))?;
            if !t.is_finite() || !sum.is_finite() {
                return Err(Error::Overflow("dpdn series left the f64 range".into()));
            }
            sum += t;
            if t < tail_tol * (1.0 + sum) {
                let next = term(kf + 1.0, pow_exp(kf + 1.0), gamma_arg(kf + 1.0))?;
                let ratio = if t > 0.0 { next / t } else { 0.0 };
                let tail = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
                return Ok((sum, k, tail));
            }
        }
        Ok((sum, SERIES_TERM_CAP, f64::INFINITY))
    };

    let (eps_coefficient, eps_series_terms, eps_tail_bound) = sum_series(
        d.powf(mu - rho + 1.0) / gamma_fn(mu + 1.0)?,
        &|k| (k + 1.0) * mu,
        &|k| (k + 1.0) * mu - rho + 1.0,
    )?;
    let (data_coefficient, data_series_terms, data_tail_bound) =
        sum_series(1.0 / gamma_fn(rho)?, &|k| k * mu, &|k| rho + k * mu)?;

    let total = (eps1 + eps2) * eps_coefficient + (ya1 - ya2).abs() * data_coefficient;
    Ok(DpdnBound {
        total,
        eps_coefficient,
        data_coefficient,
        eps_series_terms,
        data_series_terms,
        eps_tail_bound,
        data_tail_bound,
    })
}

/// Ulam–Hyers distance check: solves the problem with the matched initial
/// datum y_a = Γ(ρ)·(perturbed w_0), i.e. the theorem's condition
/// I^{1−ρ;Ψ}y*(a) = I^{1−ρ;Ψ}y(a), and compares ‖perturbed − y‖ in the
/// weighted norm against hu_constant·ε. Caller obligation: `perturbed`
/// passes [`residual_certificate`] at this ε.
pub fn hu_distance_check(
    problem: &CauchyProblem,
    perturbed: &WeightedFunction,
    epsilon: f64,
    grid: &Grid,
) -> Result<StabilityCertificate> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    if !perturbed.grid().same_nodes(grid) {
        return Err(Error::GridMismatch(
            "perturbed candidate is not sampled on the requested grid".into(),
        ));
    }
    let matched_ya = gamma_fn(problem.order().rho())? * perturbed.w0();
    let matched = problem.with_initial(matched_ya)?;
    let report = picard_solve(&matched, grid, DISTANCE_SOLVE_TOL, DISTANCE_SOLVE_MAX_ITER)?;
    let constant = hu_constant(problem)?;
    let bound = constant * epsilon;
    let observed: Vec<f64> = perturbed
        .w()
        .iter()
        .zip(report.solution.w())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let profile = vec![bound; observed.len()];
    Ok(StabilityCertificate::from_profiles(
        StabilityKind::Hu,
        epsilon,
        constant,
        profile,
        &observed,
    ))
}

/// Rassias-type pointwise distance check with a grid-certified λ: compares
/// weighted |y*(t_j) − y(t_j)| against hur_constant(λ)·ε·φ(t_j) at every
/// node, with y the matched solution as in [`hu_distance_check`].
pub fn hur_distance_check(
    problem: &CauchyProblem,
    perturbed: &WeightedFunction,
    epsilon: f64,
    phi: &PhiFunction,
    lambda: f64,
    grid: &Grid,
) -> Result<StabilityCertificate> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    if !perturbed.grid().same_nodes(grid) {
        return Err(Error::GridMismatch(
            "perturbed candidate is not sampled on the requested grid".into(),
        ));
    }
    if phi.values().len() != grid.n() + 1 {
        return Err(Error::GridMismatch("phi not sampled on this grid".into()));
    }
    let constant = hur_constant(problem, lambda)?;
    let matched_ya = gamma_fn(problem.order().rho())? * perturbed.w0();
    let matched = problem.with_initial(matched_ya)?;
    let report = picard_solve(&matched, grid, DISTANCE_SOLVE_TOL, DISTANCE_SOLVE_MAX_ITER)?;
    let observed: Vec<f64> = perturbed
        .w()
        .iter()
        .zip(report.solution.w())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let profile: Vec<f64> = phi
        .values()
        .iter()
        .map(|&p| constant * epsilon * p)
        .collect();
    Ok(StabilityCertificate::from_profiles(
        StabilityKind::Hur,
        epsilon,
        constant,
        profile,
        &observed,
    ))
}

fn check_grid_matches_psi(grid: &Grid, psi: &PsiMap) -> Result<()> {
    let u = grid.psi_nodes();
    let n = grid.n();
    if (u[0] - psi.eval(psi.a())).abs() > 1e-12 * (1.0 + u[0].abs())
        || (u[n] - psi.eval(psi.b())).abs() > 1e-12 * (1.0 + u[n].abs())
    {
        return Err(Error::GridMismatch(
            "grid psi-nodes do not match the problem's psi interval".into(),
        ));
    }
    Ok(())
}
