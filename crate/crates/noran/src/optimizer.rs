//! Power-split optimization: minimize the eavesdropper-minus-legitimate
//! capacity difference over the signal/noise power split, assuming the
//! legitimate receiver cancels the injected noise.
//!
//! The objective
//!
//! ```text
//! f(u, k) = log2(1 + a*u / (a*k + sigma_e2)) - log2(1 + b*u / sigma_n2)
//! ```
//!
//! over `{u >= 0, k >= 0, u + k <= P}` is not convex, but it splits exactly
//! into a convex part (negated logs of affine forms) plus a concave part
//! (a log of an affine form):
//!
//! ```text
//! convex(u, k)  = -log2(a*k + sigma_e2) + log2(sigma_e2)
//!                 -log2(sigma_n2 + b*u) + log2(sigma_n2)
//! concave(u, k) =  log2(a*(u + k) + sigma_e2) - log2(sigma_e2)
//! ```
//!
//! Both parts vanish at the origin and sum to `f` identically. The
//! concave-convex procedure linearizes the concave part at the current
//! iterate, producing a tight convex upper bound whose constrained minimizer
//! is found by projected gradient descent with Armijo backtracking; the
//! projection onto the triangle is exact and closed-form. Each outer step can
//! only decrease `f` (majorize-minimize), so the objective trace is
//! non-increasing.
//!
//! [`oracle_grid_search`] is an independent brute-force reference: the
//! objective never increases when `k` grows at fixed `u`, so the search space
//! collapses to the budget face `u + k = P` (plus the `k = 0` edge as a
//! safety check), which a dense 1-D grid plus golden-section refinement
//! solves to high accuracy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::secrecy::PowerAllocation;

const LN_2: f64 = std::f64::consts::LN_2;

/// Coefficients of one power-split instance: effective gains of the two
/// links, receiver noise powers, and the total power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcObjective {
    /// Eavesdropper effective gain `||G p||^2`.
    pub a: f64,
    /// Legitimate effective gain `||H p||^2`.
    pub b: f64,
    pub sigma_n2: f64,
    pub sigma_e2: f64,
    pub p_budget: f64,
}

impl DcObjective {
    pub fn new(a: f64, b: f64, sigma_n2: f64, sigma_e2: f64, p_budget: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "effective gains must be finite and nonnegative, got a={a}, b={b}"
            )));
        }
        if !(sigma_n2 > 0.0 && sigma_n2.is_finite() && sigma_e2 > 0.0 && sigma_e2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise powers must be positive, got sigma_n2={sigma_n2}, sigma_e2={sigma_e2}"
            )));
        }
        if !(p_budget >= 0.0 && p_budget.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "power budget must be finite and nonnegative, got {p_budget}"
            )));
        }
        Ok(DcObjective {
            a,
            b,
            sigma_n2,
            sigma_e2,
            p_budget,
        })
    }

    fn value(&self, u: f64, k: f64) -> f64 {
        (1.0 + self.a * u / (self.a * k + self.sigma_e2)).log2()
            - (1.0 + self.b * u / self.sigma_n2).log2()
    }

    fn alloc(&self, u: f64, k: f64) -> PowerAllocation {
        PowerAllocation {
            sigma_u2: u,
            sigma_k2: k,
            p_budget: self.p_budget,
        }
    }
}

/// Minimization objective at a feasible allocation; its negative is the
/// cancellation-mode secrecy capacity.
pub fn objective(dc: &DcObjective, alloc: &PowerAllocation) -> Result<f64> {
    alloc.validate()?;
    Ok(dc.value(alloc.sigma_u2, alloc.sigma_k2))
}

/// The exact convex + concave decomposition, both parts anchored to vanish at
/// the origin. Their sum reproduces the objective at every feasible point.
pub fn dc_split(dc: &DcObjective, alloc: &PowerAllocation) -> (f64, f64) {
    let (u, k) = (alloc.sigma_u2, alloc.sigma_k2);
    let convex = -(dc.a * k + dc.sigma_e2).log2() + dc.sigma_e2.log2()
        - (dc.sigma_n2 + dc.b * u).log2()
        + dc.sigma_n2.log2();
    let concave = (dc.a * (u + k) + dc.sigma_e2).log2() - dc.sigma_e2.log2();
    (convex, concave)
}

/// Gradient of the convex part, `(d/du, d/dk)`.
pub fn convex_part_grad(dc: &DcObjective, alloc: &PowerAllocation) -> (f64, f64) {
    let du = -dc.b / ((dc.sigma_n2 + dc.b * alloc.sigma_u2) * LN_2);
    let dk = -dc.a / ((dc.a * alloc.sigma_k2 + dc.sigma_e2) * LN_2);
    (du, dk)
}

/// Gradient of the concave part; equal in both coordinates since the part
/// depends only on `u + k`.
pub fn concave_part_grad(dc: &DcObjective, alloc: &PowerAllocation) -> (f64, f64) {
    let d = dc.a / ((dc.a * (alloc.sigma_u2 + alloc.sigma_k2) + dc.sigma_e2) * LN_2);
    (d, d)
}

/// The concave-convex surrogate: convex part at `alloc` plus the concave part
/// linearized at `anchor`. Tight at `alloc == anchor` and an upper bound on
/// the objective everywhere.
pub fn surrogate(dc: &DcObjective, alloc: &PowerAllocation, anchor: &PowerAllocation) -> f64 {
    let (convex, _) = dc_split(dc, alloc);
    let (_, concave_anchor) = dc_split(dc, anchor);
    let (gu, gk) = concave_part_grad(dc, anchor);
    convex
        + concave_anchor
        + gu * (alloc.sigma_u2 - anchor.sigma_u2)
        + gk * (alloc.sigma_k2 - anchor.sigma_k2)
}

/// Exact Euclidean projection onto `{u >= 0, k >= 0, u + k <= p}`.
fn triangle_project(u: f64, k: f64, p: f64) -> (f64, f64) {
    let (cu, ck) = (u.max(0.0), k.max(0.0));
    if cu + ck <= p {
        return (cu, ck);
    }
    // Budget face is active: project onto the segment (p,0)..(0,p).
    let t = ((u - k + p) / 2.0).clamp(0.0, p);
    (t, p - t)
}

/// Norm of the unit-step projected-gradient mapping of the objective at
/// `alloc`; zero at constrained stationary points.
pub fn projected_gradient_norm(dc: &DcObjective, alloc: &PowerAllocation) -> f64 {
    let (cu, ck) = convex_part_grad(dc, alloc);
    let (vu, vk) = concave_part_grad(dc, alloc);
    let (gu, gk) = (cu + vu, ck + vk);
    let (pu, pk) = triangle_project(alloc.sigma_u2 - gu, alloc.sigma_k2 - gk, dc.p_budget);
    ((alloc.sigma_u2 - pu).powi(2) + (alloc.sigma_k2 - pk).powi(2)).sqrt()
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_PGD_ITERS: usize = 200_000;
const MAX_BACKTRACKS: usize = 60;

/// Minimizes the surrogate anchored at `anchor` over the feasible triangle by
/// projected gradient descent with backtracking (Armijo, shrink 0.5, initial
/// step 1.0), to `tol` accuracy in objective value.
pub fn solve_subproblem(dc: &DcObjective, anchor: &PowerAllocation, tol: f64) -> Result<PowerAllocation> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "subproblem tolerance must be positive, got {tol}"
        )));
    }
    let p = dc.p_budget;
    if p <= 0.0 {
        return Ok(dc.alloc(0.0, 0.0));
    }
    // Linearized concave slope is constant across the subproblem.
    let (gamma_u, gamma_k) = concave_part_grad(dc, anchor);
    let sur = |u: f64, k: f64| -> f64 {
        let a = dc.alloc(u, k);
        surrogate(dc, &a, anchor)
    };
    let grad = |u: f64, k: f64| -> (f64, f64) {
        let (cu, ck) = convex_part_grad(dc, &dc.alloc(u, k));
        (cu + gamma_u, ck + gamma_k)
    };

    let (mut u, mut k) = triangle_project(anchor.sigma_u2, anchor.sigma_k2, p);
    let mut f_cur = sur(u, k);
    if !f_cur.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "surrogate is not finite at the anchor (u={u}, k={k})"
        )));
    }
    // Value accuracy `tol` over a domain of diameter ~sqrt(2) P translates to
    // this gradient-mapping threshold.
    let pg_tol = (tol / (1.0 + p)).max(1e-14);
    let mut stalls = 0usize;

    for _ in 0..MAX_PGD_ITERS {
        let (gu, gk) = grad(u, k);
        if !(gu.is_finite() && gk.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "surrogate gradient is not finite at (u={u}, k={k})"
            )));
        }
        let (pu, pk) = triangle_project(u - gu, k - gk, p);
        let pg = ((u - pu).powi(2) + (k - pk).powi(2)).sqrt();
        if pg <= pg_tol {
            break;
        }

        let mut alpha = 1.0f64;
        let mut moved = false;
        for _ in 0..MAX_BACKTRACKS {
            let (nu, nk) = triangle_project(u - alpha * gu, k - alpha * gk, p);
            let (du, dk) = (nu - u, nk - k);
            if du == 0.0 && dk == 0.0 {
                break;
            }
            let f_new = sur(nu, nk);
            if !f_new.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "surrogate is not finite at (u={nu}, k={nk})"
                )));
            }
            if f_new <= f_cur + ARMIJO_C1 * (gu * du + gk * dk) {
                if (f_cur - f_new).abs() <= 1e-18 * (1.0 + f_new.abs()) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                u = nu;
                k = nk;
                f_cur = f_new;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved || stalls >= 3 {
            break;
        }
    }
    Ok(dc.alloc(u, k))
}

/// How the concave-convex iteration is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CcpInit {
    /// All power on the signal: `(P, 0)`.
    FullSignal,
    /// Even split: `(P/2, P/2)`.
    HalfSplit,
    /// Explicit starting point `(u, k)`; must be feasible.
    Custom(f64, f64),
}

/// Iteration controls for [`ccp_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcpConfig {
    pub max_iter: usize,
    /// Absolute stopping tolerance on the objective change per iteration.
    pub tol: f64,
    pub init: CcpInit,
    pub subproblem_tol: f64,
}

impl Default for CcpConfig {
    fn default() -> Self {
        CcpConfig {
            max_iter: 200,
            tol: 1e-8,
            init: CcpInit::HalfSplit,
            subproblem_tol: 1e-10,
        }
    }
}

impl CcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.subproblem_tol > 0.0 && self.subproblem_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "subproblem_tol must be positive, got {}",
                self.subproblem_tol
            )));
        }
        Ok(())
    }
}

/// Result of a concave-convex run.
#[derive(Debug, Clone, PartialEq)]
pub struct CcpState {
    pub alloc: PowerAllocation,
    /// Objective value at the initial point and after every iteration;
    /// non-increasing by the majorize-minimize construction.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CcpState {
    /// The achieved secrecy capacity (negated minimization objective).
    pub fn secrecy_value(&self) -> f64 {
        -*self.objective_trace.last().expect("trace is never empty")
    }
}

/// Concave-convex procedure: repeatedly minimize the convex surrogate
/// anchored at the current iterate until the objective change drops below
/// `cfg.tol` or `cfg.max_iter` is reached.
pub fn ccp_solve(dc: &DcObjective, cfg: &CcpConfig) -> Result<CcpState> {
    cfg.validate()?;
    let p = dc.p_budget;
    let (u0, k0) = match cfg.init {
        CcpInit::FullSignal => (p, 0.0),
        CcpInit::HalfSplit => (p / 2.0, p / 2.0),
        CcpInit::Custom(u, k) => {
            let candidate = dc.alloc(u, k);
            candidate.validate()?;
            (u, k)
        }
    };
    let mut current = dc.alloc(u0, k0);
    let mut trace = vec![dc.value(current.sigma_u2, current.sigma_k2)];
    let mut iterations = 0;
    let mut converged = false;

    for r in 0..cfg.max_iter {
        let next = solve_subproblem(dc, &current, cfg.subproblem_tol).map_err(|e| {
            Error::NumericalFailure(format!("subproblem failed at iteration {r}: {e}"))
        })?;
        let f_prev = *trace.last().unwrap();
        let f_next = dc.value(next.sigma_u2, next.sigma_k2);
        iterations = r + 1;
        if f_next > f_prev {
            // Only float noise can get here; keep the trace monotone.
            converged = true;
            break;
        }
        trace.push(f_next);
        current = next;
        if (f_prev - f_next).abs() < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(CcpState {
        alloc: current,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Independent brute-force reference optimizer. The objective is
/// non-increasing in `k` at fixed `u`, so the optimum lies on the budget face
/// `u + k = P`; a dense grid over that face (plus the `k = 0` edge) followed
/// by golden-section refinement pins it down. Grid ties within 1e-12 resolve
/// to the smallest `u`.
pub fn oracle_grid_search(dc: &DcObjective, grid_points: usize) -> PowerAllocation {
    let p = dc.p_budget;
    if p <= 0.0 || grid_points < 2 {
        return dc.alloc(0.0, 0.0);
    }
    let n = grid_points;
    let face = |u: f64| dc.value(u, p - u);
    let edge = |u: f64| dc.value(u, 0.0);

    // (value, u, on_face)
    let mut best = (face(0.0), 0.0, true);
    let consider = |val: f64, u: f64, on_face: bool, best: &mut (f64, f64, bool)| {
        if val < best.0 - 1e-12 || ((val - best.0).abs() <= 1e-12 && u < best.1) {
            *best = (val, u, on_face);
        }
    };
    for i in 0..n {
        let u = if i + 1 == n { p } else { p * i as f64 / (n - 1) as f64 };
        consider(face(u), u, true, &mut best);
        consider(edge(u), u, false, &mut best);
    }

    let step = p / (n - 1) as f64;
    let lo = (best.1 - step).max(0.0);
    let hi = (best.1 + step).min(p);
    let refined = if best.2 {
        golden_section_min(face, lo, hi)
    } else {
        golden_section_min(edge, lo, hi)
    };
    let (ru, rval) = refined;
    consider(rval, ru, best.2, &mut best);

    let (_, u, on_face) = best;
    if on_face {
        dc.alloc(u, p - u)
    } else {
        dc.alloc(u, 0.0)
    }
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`, to an interval
/// width of 1e-10. Returns the midpoint of the final bracket and its value.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// The transmit-side amplitude template for an optimized noise power: every
/// transmit antenna carries amplitude `sqrt(sigma_k2_opt)`. The per-symbol
/// realization is drawn from the codebook's seeded stream with variance
/// `sigma_k2_opt`.
pub fn suboptimal_noran_design(sigma_k2_opt: f64, n_tx: usize) -> Result<Vec<Complex64>> {
    if !(sigma_k2_opt >= 0.0 && sigma_k2_opt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise power must be finite and nonnegative, got {sigma_k2_opt}"
        )));
    }
    if n_tx == 0 {
        return Err(Error::InvalidArgument(
            "transmit antenna count must be >= 1".into(),
        ));
    }
    Ok(vec![Complex64::new(sigma_k2_opt.sqrt(), 0.0); n_tx])
}
