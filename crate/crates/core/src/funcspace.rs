//! The weighted space C_{1−ρ;Ψ}, graded grids and the weight/Ω factors.
//!
//! Solutions of the Cauchy problem blow up like (Ψ(t)−Ψ(a))^{ρ−1} at the
//! left endpoint, so nothing here stores raw samples: a [`WeightedFunction`]
//! keeps w(t) = (Ψ(t)−Ψ(a))^{1−ρ} y(t), which extends continuously to t = a.
//! The norm of the space is the max of |w| over the grid.

use std::fmt;
use std::sync::Arc;

use crate::special::gamma_fn;
use crate::{Error, Result};

/// Number of uniform sample points used to validate Ψ at construction.
const PSI_VALIDATION_SAMPLES: usize = 1024;

/// The order triple (μ, ν, ρ = μ + ν − μν) that parameterizes every operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    mu: f64,
    nu: f64,
    rho: f64,
}

impl Order {
    /// Requires 0 < μ < 1 and 0 ≤ ν ≤ 1; ρ is derived.
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Domain(format!("order mu = {mu} must lie in (0,1)")));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Domain(format!("type nu = {nu} must lie in [0,1]")));
        }
        let rho = mu + nu * (1.0 - mu);
        debug_assert!(mu <= rho && rho <= 1.0);
        Ok(Self { mu, nu, rho })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An increasing C¹ coordinate map Ψ on `[a,b]` together with Ψ′.
///
/// Monotonicity is validated by sampling Ψ′ > 0 and Ψ strictly increasing on
/// a 1024-point uniform sample; a symbolic proof is not attempted. The left
/// endpoint may sit at 0 (the formulas never divide by a).
#[derive(Clone)]
pub struct PsiMap {
    psi: RealMap,
    dpsi: RealMap,
    a: f64,
    b: f64,
    psi_a: f64,
}

impl fmt::Debug for PsiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiMap")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("psi_a", &self.psi_a)
            .finish()
    }
}

impl PsiMap {
    pub fn new<F, G>(psi: F, dpsi: G, a: f64, b: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !a.is_finite() || !b.is_finite() || !(a >= 0.0) || !(a < b) {
            return Err(Error::Domain(format!(
                "interval [{a}, {b}] must satisfy 0 <= a < b"
            )));
        }
        let mut prev = psi(a);
        if !prev.is_finite() {
            return Err(Error::InvalidArgument(format!("psi({a}) is not finite")));
        }
        for k in 0..PSI_VALIDATION_SAMPLES {
            let t = a + (b - a) * (k as f64 + 1.0) / PSI_VALIDATION_SAMPLES as f64;
            let d = dpsi(t);
            if !(d > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "psi'({t}) = {d} is not positive; psi must be increasing"
                )));
            }
            let v = psi(t);
            if !(v > prev) {
                return Err(Error::InvalidArgument(format!(
                    "psi is not strictly increasing at t = {t}"
                )));
            }
            prev = v;
        }
        // Also check psi' at the left endpoint itself.
        if !(dpsi(a) > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "psi'({a}) = {} is not positive",
                dpsi(a)
            )));
        }
        let psi_a = psi(a);
        Ok(Self {
            psi: Arc::new(psi),
            dpsi: Arc::new(dpsi),
            a,
            b,
            psi_a,
        })
    }

    /// Ψ(t) = t.
    pub fn identity(a: f64, b: f64) -> Result<Self> {
        Self::new(|t| t, |_| 1.0, a, b)
    }

    /// Ψ(t) = e^t.
    pub fn exponential(a: f64, b: f64) -> Result<Self> {
        Self::new(f64::exp, f64::exp, a, b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.dpsi)(t)
    }

    /// Ψ(t) − Ψ(a).
    pub fn delta(&self, t: f64) -> f64 {
        (self.psi)(t) - self.psi_a
    }

    /// Ψ(b) − Ψ(a).
    pub fn total_delta(&self) -> f64 {
        (self.psi)(self.b) - self.psi_a
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }
}

/// Graded grid t_j = a + (b−a)(j/N)^r with cached Ψ(t_j).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    psi_nodes: Vec<f64>,
    grading: f64,
}

impl Grid {
    /// Number of subintervals N (the grid has N+1 nodes).
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn psi_nodes(&self) -> &[f64] {
        &self.psi_nodes
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn same_nodes(&self, other: &Grid) -> bool {
        self.nodes == other.nodes
    }
}

/// Builds the graded grid for `psi` with N subintervals and grading exponent
/// r ≥ 1 (r = 1 is uniform; larger r clusters nodes at the singular end).
pub fn make_grid(psi: &PsiMap, n: usize, r: f64) -> Result<Grid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid needs N >= 2, got {n}")));
    }
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("grading r = {r} must be >= 1")));
    }
    let (a, b) = (psi.a(), psi.b());
    let mut nodes = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let frac = (j as f64 / n as f64).powf(r);
        nodes.push(a + (b - a) * frac);
    }
    nodes[n] = b;
    let psi_nodes: Vec<f64> = nodes.iter().map(|&t| psi.eval(t)).collect();
    for j in 0..n {
        if !(psi_nodes[j + 1] > psi_nodes[j]) {
            return Err(Error::InvalidArgument(format!(
                "psi nodes are not strictly increasing between t_{j} and t_{}; \
                 grid too fine for this psi or psi not increasing",
                j + 1
            )));
        }
    }
    Ok(Grid {
        nodes,
        psi_nodes,
        grading: r,
    })
}

/// A grid sample of y ∈ C_{1−ρ;Ψ} stored in weighted form
/// w_j = (Ψ(t_j)−Ψ(a))^{1−ρ} y(t_j), with w_0 the (finite) limit at t = a.
#[derive(Clone, PartialEq)]
pub struct WeightedFunction {
    grid: Grid,
    order: Order,
    w: Vec<f64>,
}

impl fmt::Debug for WeightedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedFunction")
            .field("n", &self.grid.n())
            .field("order", &self.order)
            .field("w0", &self.w.first())
            .field("wN", &self.w.last())
            .finish()
    }
}

impl WeightedFunction {
    /// Wraps already-weighted samples. `w` must have grid.n()+1 finite entries.
    pub fn from_weighted_samples(grid: Grid, order: Order, w: Vec<f64>) -> Result<Self> {
        if w.len() != grid.n() + 1 {
            return Err(Error::InvalidArgument(format!(
                "weighted sample length {} does not match grid ({} nodes)",
                w.len(),
                grid.n() + 1
            )));
        }
        if let Some(bad) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weighted sample at node {bad} is not finite"
            )));
        }
        Ok(Self { grid, order, w })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn w0(&self) -> f64 {
        self.w[0]
    }

    pub(crate) fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }
}

/// The weight (Ψ(t)−Ψ(a))^{1−ρ}; 0 at t = a for ρ < 1, 1 there for ρ = 1.
pub fn weight(psi: &PsiMap, order: Order, t: f64) -> Result<f64> {
    if !psi.contains(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside [{}, {}]",
            psi.a(),
            psi.b()
        )));
    }
    if t == psi.a() {
        return Ok(if order.rho() < 1.0 { 0.0 } else { 1.0 });
    }
    Ok(psi.delta(t).powf(1.0 - order.rho()))
}

/// The homogeneous-solution factor Ω_Ψ^ρ(t,a) = (Ψ(t)−Ψ(a))^{ρ−1}/Γ(ρ).
/// Singular at t = a when ρ < 1.
pub fn omega(psi: &PsiMap, order: Order, t: f64) -> Result<f64> {
    if !psi.contains(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside [{}, {}]",
            psi.a(),
            psi.b()
        )));
    }
    let rho = order.rho();
    if t == psi.a() && rho < 1.0 {
        return Err(Error::Domain(
            "omega is singular at t = a for rho < 1".into(),
        ));
    }
    let base = if t == psi.a() { 1.0 } else { psi.delta(t).powf(rho - 1.0) };
    Ok(base / gamma_fn(rho)?)
}

/// Discrete ‖·‖_{C_{1−ρ;Ψ}}: max_j |w_j|.
pub fn weighted_norm(f: &WeightedFunction) -> f64 {
    f.w.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Max-norm of the difference of two weighted functions on the same grid.
pub fn weighted_distance(f: &WeightedFunction, g: &WeightedFunction) -> Result<f64> {
    if !f.grid.same_nodes(&g.grid) {
        return Err(Error::GridMismatch(
            "weighted_distance requires identical grids".into(),
        ));
    }
    Ok(f.w
        .iter()
        .zip(&g.w)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Wraps raw samples y(t_1), …, y(t_N) into weighted form. The limit value
/// w_0 at t = a cannot be inferred from samples and must be supplied by the
/// caller (for solutions of the integral equation it is y_a/Γ(ρ)).
pub fn to_weighted(
    psi: &PsiMap,
    order: Order,
    grid: &Grid,
    y_interior: &[f64],
    w0: f64,
) -> Result<WeightedFunction> {
    let n = grid.n();
    if y_interior.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {} interior values (t_1..t_N), got {}",
            n,
            y_interior.len()
        )));
    }
    if !w0.is_finite() {
        return Err(Error::InvalidArgument("w0 is not finite".into()));
    }
    let u = grid.psi_nodes();
    let u0 = u[0];
    let mut w = Vec::with_capacity(n + 1);
    w.push(w0);
    for (j, &y) in y_interior.iter().enumerate() {
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "y value at node {} is not finite",
                j + 1
            )));
        }
        w.push((u[j + 1] - u0).powf(1.0 - order.rho()) * y);
    }
    let _ = psi; // grid already carries psi nodes; psi kept in the signature for symmetry
    WeightedFunction::from_weighted_samples(grid.clone(), order, w)
}

/// Recovers raw samples y(t_j) from weighted storage. At t_0 the raw value
/// is w_0 for ρ = 1; for ρ < 1 it is ±∞ when w_0 ≠ 0 and NaN (an explicit
/// "unknown" marker) when w_0 = 0, since the limit of y itself is not
/// determined by the weighted data.
pub fn from_weighted(f: &WeightedFunction) -> Vec<f64> {
    let rho = f.order.rho();
    let u = f.grid.psi_nodes();
    let u0 = u[0];
    let mut y = Vec::with_capacity(f.w.len());
    if rho == 1.0 {
        y.push(f.w[0]);
    } else if f.w[0] == 0.0 {
        y.push(f64::NAN);
    } else {
        y.push(f64::INFINITY.copysign(f.w[0]));
    }
    for j in 1..f.w.len() {
        y.push(f.w[j] * (u[j] - u0).powf(rho - 1.0));
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{mittag_leffler2, MLParams};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn order(mu: f64, nu: f64) -> Order {
        Order::new(mu, nu).unwrap()
    }

    #[test]
    fn order_invariants() {
        let o = order(0.5, 0.5);
        assert_eq!(o.rho(), 0.75);
        assert!(Order::new(1.0, 0.5).is_err());
        assert!(Order::new(0.0, 0.5).is_err());
        assert!(Order::new(0.5, -0.1).is_err());
        assert!(Order::new(0.5, 1.1).is_err());
        let o = order(0.3, 1.0);
        assert!(rel(o.rho(), 1.0) < 1e-15);
    }

    #[test]
    fn weight_examples() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let o = order(0.5, 0.5); // rho = 3/4
        assert_eq!(weight(&psi, o, 1.0).unwrap(), 1.0);
        assert_eq!(weight(&psi, o, 0.0).unwrap(), 0.0);
        assert!(rel(weight(&psi, o, 1.0 / 16.0).unwrap(), 0.5) < 1e-14);
        assert!(weight(&psi, o, 1.5).is_err());
        // rho = 1: weight 1 at t = a
        let o1 = order(0.5, 1.0);
        assert_eq!(weight(&psi, o1, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn omega_examples() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let o1 = order(0.5, 1.0); // rho = 1
        assert!(rel(omega(&psi, o1, 0.3).unwrap(), 1.0) < 1e-14);
        let o = order(0.5, 0.5); // rho = 3/4
        let g34 = gamma_fn(0.75).unwrap();
        assert!(rel(omega(&psi, o, 1.0).unwrap(), 1.0 / g34) < 1e-13);
        assert!(rel(omega(&psi, o, 1.0 / 16.0).unwrap(), 2.0 / g34) < 1e-13);
        assert!(matches!(omega(&psi, o, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_omega_inverse() {
        let psi = PsiMap::exponential(0.0, 1.0).unwrap();
        for &(mu, nu) in &[(0.5, 0.5), (0.3, 0.9), (0.8, 0.0)] {
            let o = order(mu, nu);
            let g = gamma_fn(o.rho()).unwrap();
            for k in 1..=20 {
                let t = k as f64 / 20.0;
                let p = weight(&psi, o, t).unwrap() * omega(&psi, o, t).unwrap() * g;
                assert!(rel(p, 1.0) < 1e-13, "t={t} product={p}");
            }
        }
    }

    #[test]
    fn make_grid_examples() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let g = make_grid(&psi, 2, 1.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        let g = make_grid(&psi, 2, 2.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 1.0]);
        let psi = PsiMap::identity(1.0, 2.0).unwrap();
        let g = make_grid(&psi, 4, 3.0).unwrap();
        let expect = [1.0, 1.0 + 0.25_f64.powi(3), 1.0 + 0.5_f64.powi(3), 1.0 + 0.75_f64.powi(3), 2.0];
        for (a, b) in g.nodes().iter().zip(expect) {
            assert!(rel(*a, b) < 1e-15);
        }
        assert!(make_grid(&psi, 1, 1.0).is_err());
        assert!(make_grid(&psi, 8, 0.5).is_err());
    }

    #[test]
    fn grid_first_node_formula() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        for &(n, r) in &[(16usize, 1.0), (128, 4.0 / 3.0), (512, 2.5)] {
            let g = make_grid(&psi, n, r).unwrap();
            let expect = (1.0 / n as f64).powf(r);
            assert!(rel(g.nodes()[1], expect) < 1e-14);
            assert!(g.nodes().windows(2).all(|p| p[1] > p[0]));
        }
    }

    #[test]
    fn psimap_rejects_nonmonotone() {
        assert!(PsiMap::new(|t| -t, |_| -1.0, 0.0, 1.0).is_err());
        assert!(PsiMap::new(|t| (3.0 * t).sin(), |t| 3.0 * (3.0 * t).cos(), 0.0, 2.0).is_err());
        assert!(PsiMap::new(|t| t, |_| 1.0, -1.0, 1.0).is_err());
        assert!(PsiMap::new(|t| t, |_| 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let o = order(0.5, 0.5);
        let g = make_grid(&psi, 2, 1.0).unwrap();
        let z = WeightedFunction::from_weighted_samples(g.clone(), o, vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(weighted_norm(&z), 0.0);
        let f = WeightedFunction::from_weighted_samples(g, o, vec![1.0, -3.0, 2.0]).unwrap();
        assert_eq!(weighted_norm(&f), 3.0);
    }

    #[test]
    fn example_solution_norm_attained_at_b() {
        // Weighted form of the worked example's exact solution is increasing,
        // so the norm is its value at t = b: 2 E_{1/2,3/4}(4).
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let o = order(0.5, 0.5);
        let grid = make_grid(&psi, 64, 4.0 / 3.0).unwrap();
        let p = MLParams::new(0.5, 0.75).unwrap();
        let w: Vec<f64> = grid
            .psi_nodes()
            .iter()
            .map(|&u| 2.0 * mittag_leffler2(p, 4.0 * u.sqrt()).unwrap())
            .collect();
        let f = WeightedFunction::from_weighted_samples(grid, o, w).unwrap();
        let expect = 2.0 * 35544442.02787793;
        assert!(rel(weighted_norm(&f), expect) < 1e-12);
    }

    #[test]
    fn to_from_weighted_round_trip() {
        let psi = PsiMap::exponential(0.0, 1.0).unwrap();
        let o = order(0.5, 0.5);
        let grid = make_grid(&psi, 32, 2.0).unwrap();
        let y: Vec<f64> = grid.nodes()[1..].iter().map(|&t| (t + 0.3).cos()).collect();
        let f = to_weighted(&psi, o, &grid, &y, 0.0).unwrap();
        let back = from_weighted(&f);
        assert!(back[0].is_nan()); // unknown at the singular endpoint
        for (a, b) in back[1..].iter().zip(&y) {
            assert!(rel(*a, *b) < 1e-14);
        }
        // rho = 1: identity on values, including node 0
        let o1 = order(0.5, 1.0);
        let f = to_weighted(&psi, o1, &grid, &y, 7.0).unwrap();
        assert_eq!(from_weighted(&f)[0], 7.0);
        for (j, (a, b)) in from_weighted(&f)[1..].iter().zip(&f.w()[1..]).enumerate() {
            assert!(rel(*a, *b) < 1e-14, "node {}", j + 1);
        }
    }

    #[test]
    fn from_weighted_singular_marker() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let o = order(0.5, 0.5);
        let grid = make_grid(&psi, 4, 1.0).unwrap();
        let f =
            WeightedFunction::from_weighted_samples(grid.clone(), o, vec![2.0; 5]).unwrap();
        assert_eq!(from_weighted(&f)[0], f64::INFINITY);
        let g =
            WeightedFunction::from_weighted_samples(grid, o, vec![-1.0, 1.0, 1.0, 1.0, 1.0])
                .unwrap();
        assert_eq!(from_weighted(&g)[0], f64::NEG_INFINITY);
    }

    #[test]
    fn weights_cancel_for_power_data() {
        // y(t) = (psi(t)-psi(a))^{rho-1} has w_j = 1 for all j >= 1.
        let psi = PsiMap::identity(0.0, 2.0).unwrap();
        let o = order(0.4, 0.7);
        let grid = make_grid(&psi, 16, 1.5).unwrap();
        let y: Vec<f64> = grid.psi_nodes()[1..]
            .iter()
            .map(|&u| (u - grid.psi_nodes()[0]).powf(o.rho() - 1.0))
            .collect();
        let f = to_weighted(&psi, o, &grid, &y, 1.0).unwrap();
        for &w in f.w() {
            assert!(rel(w, 1.0) < 1e-13);
        }
    }

    #[test]
    fn to_weighted_rejects_nonfinite() {
        let psi = PsiMap::identity(0.0, 1.0).unwrap();
        let o = order(0.5, 0.5);
        let grid = make_grid(&psi, 4, 1.0).unwrap();
        assert!(to_weighted(&psi, o, &grid, &[1.0, f64::NAN, 1.0, 1.0], 0.0).is_err());
        assert!(to_weighted(&psi, o, &grid, &[1.0, 1.0, 1.0, 1.0], f64::INFINITY).is_err());
        assert!(to_weighted(&psi, o, &grid, &[1.0, 1.0], 0.0).is_err());
    }
}
