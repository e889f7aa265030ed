//! The Ψ-fractional integral and Ψ-Hilfer derivative as grid operators.
//!
//! After the substitution u = Ψ(η) the integral becomes
//!
//! ```text
//! I^{μ;Ψ}h(t_i) = (1/Γ(μ)) ∫_{u_0}^{u_i} (u_i − u)^{μ−1} H(u) du,
//! H(u_j) = h(t_j) = w_j (u_j − u_0)^{ρ−1},
//! ```
//!
//! so the operator only ever touches the cached Ψ-nodes; Ψ⁻¹ is never
//! evaluated. The smooth weighted part w is interpolated piecewise-linearly,
//! and everything singular (the kernel (u_i−u)^{μ−1} and the data factor
//! (u−u_0)^{ρ−1}) is absorbed into per-cell moments:
//!
//! * first cell `[u_0,u_1]`: w is taken constant = w(t_1) (w is not
//!   samplable at the singular endpoint); the i=1 moment is a closed-form
//!   Beta integral, and for i ≥ 2 the left singularity is removed by the
//!   substitution s = v^{1/ρ} and integrated with 32-point Gauss–Legendre;
//! * interior cells: 16-point Gauss–Legendre on the analytic integrand
//!   (both singularities are at least one cell away, so the rule converges
//!   geometrically);
//! * the cell touching the kernel singularity: substitution x = Δ·v^{1/μ}
//!   plus 32-point Gauss–Legendre.
//!
//! The moments do not depend on the data, so the whole operator is built
//! once as a lower-triangular matrix and each application is an O(N²)
//! triangular matvec, which is what makes Picard iteration affordable.

use crate::funcspace::{Grid, Order, PsiMap, WeightedFunction};
use crate::special::{gamma_fn, ln_gamma};
use crate::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The weakly singular kernel 𝓛_Ψ^μ(t,η) = Ψ′(η)(Ψ(t)−Ψ(η))^{μ−1}.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    mu: f64,
    psi: PsiMap,
}

impl KernelSpec {
    pub fn new(mu: f64, psi: PsiMap) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("kernel order mu = {mu} must be > 0")));
        }
        Ok(Self { mu, psi })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Pointwise kernel value for a < η < t ≤ b.
    pub fn eval(&self, t: f64, eta: f64) -> f64 {
        self.psi.deriv(eta) * (self.psi.eval(t) - self.psi.eval(eta)).powf(self.mu - 1.0)
    }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [0,1]
// ---------------------------------------------------------------------------

mod gauss {
    /// Nodes and weights of the n-point Gauss-Legendre rule mapped to [0,1].
    pub fn legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Newton from the Chebyshev-like initial guess.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p0 = 1.0;
                let mut p1 = 0.0;
                for k in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k as f64 + 1.0) * z * p1 - k as f64 * p2) / (k as f64 + 1.0);
                }
                pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / pp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            let wi = 2.0 / ((1.0 - z * z) * pp * pp);
            x[i] = 0.5 * (1.0 - z);
            x[n - 1 - i] = 0.5 * (1.0 + z);
            w[i] = 0.5 * wi;
            w[n - 1 - i] = 0.5 * wi;
        }
        (x, w)
    }
}

// ---------------------------------------------------------------------------
// Fractional integral
// ---------------------------------------------------------------------------

/// Precomputed grid operator for I^{μ;Ψ} in weighted form.
///
/// `rows[i-1][j-1]` multiplies w_j in the output at node i; w_0 never enters
/// (the first-cell rule uses w_1). Output w_0 is 0: the weighted trace of
/// I^{μ;Ψ}h at a vanishes for every μ > 0 and h ∈ C_{1−ρ;Ψ}.
pub struct FracIntegralOp {
    mu: f64,
    order: Order,
    grid: Grid,
    rows: Vec<Vec<f64>>,
}

impl FracIntegralOp {
    pub fn new(mu: f64, order: Order, grid: &Grid) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("integral order mu = {mu} must be > 0")));
        }
        let rho = order.rho();
        let u = grid.psi_nodes();
        let n = grid.n();
        let u0 = u[0];
        let inv_gamma_mu = (-ln_gamma(mu)?).exp();
        let ln_beta_mu_rho = ln_gamma(mu)? + ln_gamma(rho)? - ln_gamma(mu + rho)?;

        let (g16x, g16w) = gauss::legendre_01(16);
        let (g32x, g32w) = gauss::legendre_01(32);

        // Per-cell tables for interior cells: Gauss abscissae in u and the
        // data-weight factor split between the two PL hat functions.
        let mut cell_x = vec![0.0; n * 16];
        let mut cell_c0 = vec![0.0; n * 16];
        let mut cell_c1 = vec![0.0; n * 16];
        for j in 1..n {
            let (uj, uj1) = (u[j], u[j + 1]);
            let dj = uj1 - uj;
            for g in 0..16 {
                let xg = uj + dj * g16x[g];
                let base = g16w[g] * dj * (xg - u0).powf(rho - 1.0);
                cell_x[j * 16 + g] = xg;
                cell_c0[j * 16 + g] = base * (1.0 - g16x[g]);
                cell_c1[j * 16 + g] = base * g16x[g];
            }
        }
        // Pre-transformed abscissae for the singular first cell: s = v^{1/rho}.
        let d0 = u[1] - u0;
        let first_s: Vec<f64> = g32x.iter().map(|&v| d0 * v.powf(1.0 / rho)).collect();
        // Kernel-adjacent cell: x = d * v^{1/mu}.
        let last_v: Vec<f64> = g32x.iter().map(|&v| v.powf(1.0 / mu)).collect();

        let build_row = |i: usize| -> Vec<f64> {
            let ui = u[i];
            let pref = (ui - u0).powf(1.0 - rho) * inv_gamma_mu;
            let mut row = vec![0.0; i];
            // first cell, w constant = w_1
            if i == 1 {
                row[0] += pref * d0.powf(mu + rho - 1.0) * ln_beta_mu_rho.exp();
            } else {
                let mut s = 0.0;
                for g in 0..32 {
                    s += g32w[g] * (ui - u0 - first_s[g]).powf(mu - 1.0);
                }
                row[0] += pref * d0.powf(rho) / rho * s;
            }
            // interior cells
            for j in 1..i.saturating_sub(1) {
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                for g in 0..16 {
                    let k = (ui - cell_x[j * 16 + g]).powf(mu - 1.0);
                    m0 += cell_c0[j * 16 + g] * k;
                    m1 += cell_c1[j * 16 + g] * k;
                }
                row[j - 1] += pref * m0;
                row[j] += pref * m1;
            }
            // cell touching the kernel singularity
            if i >= 2 {
                let j = i - 1;
                let dj = u[j + 1] - u[j];
                let c = dj.powf(mu) / mu;
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                for g in 0..32 {
                    let uu = ui - dj * last_v[g];
                    let base = g32w[g] * (uu - u0).powf(rho - 1.0);
                    let lam = (uu - u[j]) / dj;
                    m0 += base * (1.0 - lam);
                    m1 += base * lam;
                }
                row[j - 1] += pref * c * m0;
                row[j] += pref * c * m1;
            }
            row
        };

        #[cfg(feature = "parallel")]
        let rows: Vec<Vec<f64>> = (1..=n).into_par_iter().map(build_row).collect();
        #[cfg(not(feature = "parallel"))]
        let rows: Vec<Vec<f64>> = (1..=n).map(build_row).collect();

        Ok(Self {
            mu,
            order,
            grid: grid.clone(),
            rows,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Applies the operator to weighted samples on the same grid.
    pub fn apply(&self, g: &WeightedFunction) -> Result<WeightedFunction> {
        if !g.grid().same_nodes(&self.grid) {
            return Err(Error::GridMismatch(
                "operand grid differs from the operator grid".into(),
            ));
        }
        if g.order() != self.order {
            return Err(Error::InvalidArgument(
                "operand order differs from the operator order".into(),
            ));
        }
        let w = g.w();
        let mut out = vec![0.0; w.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for (j, c) in row.iter().enumerate() {
                acc += c * w[j + 1];
            }
            out[i + 1] = acc;
        }
        WeightedFunction::from_weighted_samples(self.grid.clone(), self.order, out)
    }
}

/// One-shot I^{μ;Ψ} in weighted form (builds the operator and applies it).
/// For repeated application on one grid build a [`FracIntegralOp`] instead.
pub fn frac_integral_weighted(mu: f64, g: &WeightedFunction) -> Result<WeightedFunction> {
    FracIntegralOp::new(mu, g.order(), g.grid())?.apply(g)
}

/// Closed form `I^{μ;Ψ}[(Ψ(·)−Ψ(a))^{δ−1}](t) = Γ(δ)/Γ(μ+δ)·(Ψ(t)−Ψ(a))^{μ+δ−1}`.
pub fn power_rule(mu: f64, delta: f64, psi: &PsiMap, t: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("mu = {mu} must be > 0")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta = {delta} must be > 0")));
    }
    if !psi.contains(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside [{}, {}]",
            psi.a(),
            psi.b()
        )));
    }
    let coef = (ln_gamma(delta)? - ln_gamma(mu + delta)?).exp();
    let expo = mu + delta - 1.0;
    if t == psi.a() {
        // the t -> a+ limit
        return if expo > 0.0 {
            Ok(0.0)
        } else if expo == 0.0 {
            Ok(coef)
        } else {
            Err(Error::Domain(
                "power_rule is singular at t = a for mu + delta < 1".into(),
            ))
        };
    }
    Ok(coef * psi.delta(t).powf(expo))
}

// ---------------------------------------------------------------------------
// Hilfer derivative
// ---------------------------------------------------------------------------

/// Ψ-Hilfer derivative D^{μ,ν;Ψ} = I^{ν(1−μ);Ψ} ∘ (1/Ψ′)(d/dt) ∘ I^{(1−ν)(1−μ);Ψ}
/// as a grid operator on weighted samples.
///
/// The middle factor is a three-point finite difference in the Ψ coordinate
/// on the nonuniform nodes (one-sided at the ends), so the result is
/// first-order accurate near a and second-order in the interior. The raw
/// trace of I^{(1−ν)(1−μ)}h at a is the exact limit Γ(ρ)·w_0 (the exponents
/// satisfy (1−ν)(1−μ) + ρ = 1), which is what the initial condition
/// I^{1−ρ;Ψ}y(a) measures. The output's w_0 is not derivable from samples
/// and is set to 0.
pub fn hilfer_derivative(order: Order, h: &WeightedFunction) -> Result<WeightedFunction> {
    let grid = h.grid();
    let n = grid.n();
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "hilfer_derivative needs at least 8 subintervals, got {n}"
        )));
    }
    if h.order() != order {
        return Err(Error::InvalidArgument(
            "operand order differs from the requested derivative order".into(),
        ));
    }
    let rho = order.rho();
    let eta1 = (1.0 - order.nu()) * (1.0 - order.mu());
    let eta2 = order.nu() * (1.0 - order.mu());
    let u = grid.psi_nodes();
    let u0 = u[0];

    // Raw values of G = I^{eta1} h, with the exact limit at the left end.
    let mut raw = vec![0.0; n + 1];
    raw[0] = gamma_fn(rho)? * h.w0();
    if eta1 > 0.0 {
        let g = FracIntegralOp::new(eta1, order, grid)?.apply(h)?;
        for j in 1..=n {
            raw[j] = g.w()[j] * (u[j] - u0).powf(rho - 1.0);
        }
    } else {
        for j in 1..=n {
            raw[j] = h.w()[j] * (u[j] - u0).powf(rho - 1.0);
        }
    }

    // dG/du on the nonuniform psi nodes.
    let mut deriv = vec![0.0; n + 1];
    for j in 1..n {
        let d1 = u[j] - u[j - 1];
        let d2 = u[j + 1] - u[j];
        deriv[j] = -d2 / (d1 * (d1 + d2)) * raw[j - 1]
            + (d2 - d1) / (d1 * d2) * raw[j]
            + d1 / (d2 * (d1 + d2)) * raw[j + 1];
    }
    deriv[0] = (raw[1] - raw[0]) / (u[1] - u0);
    let (d1, d2) = (u[n - 1] - u[n - 2], u[n] - u[n - 1]);
    deriv[n] = d2 / (d1 * (d1 + d2)) * raw[n - 2] - (d1 + d2) / (d1 * d2) * raw[n - 1]
        + (d1 + 2.0 * d2) / (d2 * (d1 + d2)) * raw[n];

    // Rewrap and apply the outer integral.
    let mut wd = vec![0.0; n + 1];
    for j in 1..=n {
        wd[j] = deriv[j] * (u[j] - u0).powf(1.0 - rho);
    }
    let wrapped = WeightedFunction::from_weighted_samples(grid.clone(), order, wd)?;
    if eta2 > 0.0 {
        FracIntegralOp::new(eta2, order, grid)?.apply(&wrapped)
    } else {
        Ok(wrapped)
    }
}
