//! Problem abstraction shared by the online solver, the oracles and the
//! applications.
//!
//! Decisions live in `R^n`. Complex matrix decisions are embedded as real
//! vectors with interleaved real and imaginary parts, so that the real inner
//! product equals `Re tr{A^H B}`.

use crate::error::SolverError;
use crate::linalg;
use crate::oracles::OracleSolution;

/// Regularity constants of a problem instance. The schedule-dependent
/// `T_max` is attached later, see [`crate::bounds::AssumptionConstants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// `D`: bound on every loss gradient norm over the base set.
    pub gradient_bound: f64,
    /// `L`: every loss is `2L`-smooth.
    pub smoothness: f64,
    /// `ϱ`: every loss is `2ϱ`-strongly convex.
    pub strong_convexity: f64,
    /// `β`: Lipschitz constant of the constraint map.
    pub constraint_lipschitz: f64,
    /// `G`: bound on the constraint vector norm.
    pub constraint_bound: f64,
    /// `ε`: a point with `g ⪯ −ε` exists.
    pub slater_margin: f64,
    /// `R`: diameter of the base set.
    pub diameter: f64,
}

/// Per-slot application measurements taken while a decision is active.
#[derive(Debug, Clone, PartialEq)]
pub struct AppSample {
    /// `f_t(x) / ‖D_t‖²`, `None` when the demand is zero.
    pub normalized_deviation: Option<f64>,
    pub power: f64,
    pub rates: Vec<f64>,
}

/// The per-period decision subproblem solved at the start of period `i+1`:
///
/// ```text
/// min_{x ∈ X0}  aggᵀ(x − x̃) + α‖x − x̃‖² + η‖x − x_i‖² + Σ_c w_c g_c(x)
/// ```
///
/// with `w_c = [Q_{i+1} + γ T_i g(x_i)]_c · γ T_{i+1}`.
#[derive(Debug, Clone, Copy)]
pub struct Subproblem<'a> {
    /// `x̃ᴶ`, the end point of the descent steps.
    pub anchor: &'a [f64],
    /// `x_i`.
    pub previous: &'a [f64],
    /// Aggregated gradient evaluated at `anchor`.
    pub gradient: &'a [f64],
    pub slots: &'a [usize],
    pub duration: usize,
    pub next_duration: usize,
    pub queue_next: &'a [f64],
    pub g_previous: &'a [f64],
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl Subproblem<'_> {
    pub fn penalty_weights(&self) -> Vec<f64> {
        let t_i = self.duration as f64;
        let t_next = self.next_duration as f64;
        self.queue_next
            .iter()
            .zip(self.g_previous)
            .map(|(q, g)| (q + self.gamma * t_i * g) * self.gamma * t_next)
            .collect()
    }
}

/// An online constrained problem with slot-indexed convex losses.
///
/// The optional hooks let an application replace the generic numerical
/// routines with closed forms; every hook must agree with the generic route.
pub trait Problem {
    fn dim(&self) -> usize;
    fn constraint_dim(&self) -> usize;
    /// Number of slots for which losses are defined.
    fn horizon(&self) -> usize;

    fn loss(&self, slot: usize, x: &[f64]) -> f64;
    fn loss_gradient(&self, slot: usize, x: &[f64]) -> Vec<f64>;

    fn constraints(&self, x: &[f64]) -> Vec<f64>;
    fn constraint_gradients(&self, x: &[f64]) -> Vec<Vec<f64>>;
    /// Lipschitz constant of each `∇g_c` (zero for affine constraints).
    fn constraint_curvature(&self) -> f64 {
        0.0
    }

    /// Euclidean projection onto the base set `X0`.
    fn project_base(&self, x: &[f64]) -> Vec<f64>;
    /// Euclidean projection onto `X = X0 ∩ {g ⪯ 0}`.
    fn project_feasible(&self, x: &[f64]) -> Vec<f64>;

    fn constants(&self) -> ProblemConstants;

    /// Closed-form projected descent step
    /// `P_X0(x − (1/2α)(T_i/S_i) Σ_s ∇f_s(x))`.
    fn descent_step(
        &self,
        _current: &[f64],
        _slots: &[usize],
        _duration: usize,
        _alpha: f64,
    ) -> Option<Result<Vec<f64>, SolverError>> {
        None
    }

    /// Closed-form solution of the per-period subproblem.
    fn solve_subproblem(&self, _sub: &Subproblem<'_>) -> Option<Result<Vec<f64>, SolverError>> {
        None
    }

    /// Specialized minimizer of `Σ_k w_k f_{slot_k}(x)` over `X`.
    fn minimize_weighted_loss(
        &self,
        _terms: &[(usize, f64)],
        _tolerance: f64,
    ) -> Option<Result<OracleSolution, SolverError>> {
        None
    }

    fn app_sample(&self, _slot: usize, _x: &[f64]) -> Option<AppSample> {
        None
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn constraint_dim(&self) -> usize {
        (**self).constraint_dim()
    }
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn loss(&self, slot: usize, x: &[f64]) -> f64 {
        (**self).loss(slot, x)
    }
    fn loss_gradient(&self, slot: usize, x: &[f64]) -> Vec<f64> {
        (**self).loss_gradient(slot, x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (**self).constraints(x)
    }
    fn constraint_gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (**self).constraint_gradients(x)
    }
    fn constraint_curvature(&self) -> f64 {
        (**self).constraint_curvature()
    }
    fn project_base(&self, x: &[f64]) -> Vec<f64> {
        (**self).project_base(x)
    }
    fn project_feasible(&self, x: &[f64]) -> Vec<f64> {
        (**self).project_feasible(x)
    }
    fn constants(&self) -> ProblemConstants {
        (**self).constants()
    }
    fn descent_step(
        &self,
        current: &[f64],
        slots: &[usize],
        duration: usize,
        alpha: f64,
    ) -> Option<Result<Vec<f64>, SolverError>> {
        (**self).descent_step(current, slots, duration, alpha)
    }
    fn solve_subproblem(&self, sub: &Subproblem<'_>) -> Option<Result<Vec<f64>, SolverError>> {
        (**self).solve_subproblem(sub)
    }
    fn minimize_weighted_loss(
        &self,
        terms: &[(usize, f64)],
        tolerance: f64,
    ) -> Option<Result<OracleSolution, SolverError>> {
        (**self).minimize_weighted_loss(terms, tolerance)
    }
    fn app_sample(&self, slot: usize, x: &[f64]) -> Option<AppSample> {
        (**self).app_sample(slot, x)
    }
}

/// Wraps a problem and hides its closed-form hooks, forcing the generic
/// numerical routes. Used to cross-check the closed forms.
#[derive(Debug, Clone, Copy)]
pub struct GenericOnly<P>(pub P);

impl<P: Problem> Problem for GenericOnly<P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn constraint_dim(&self) -> usize {
        self.0.constraint_dim()
    }
    fn horizon(&self) -> usize {
        self.0.horizon()
    }
    fn loss(&self, slot: usize, x: &[f64]) -> f64 {
        self.0.loss(slot, x)
    }
    fn loss_gradient(&self, slot: usize, x: &[f64]) -> Vec<f64> {
        self.0.loss_gradient(slot, x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.0.constraints(x)
    }
    fn constraint_gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.0.constraint_gradients(x)
    }
    fn constraint_curvature(&self) -> f64 {
        self.0.constraint_curvature()
    }
    fn project_base(&self, x: &[f64]) -> Vec<f64> {
        self.0.project_base(x)
    }
    fn project_feasible(&self, x: &[f64]) -> Vec<f64> {
        self.0.project_feasible(x)
    }
    fn constants(&self) -> ProblemConstants {
        self.0.constants()
    }
    fn app_sample(&self, slot: usize, x: &[f64]) -> Option<AppSample> {
        self.0.app_sample(slot, x)
    }
}

/// Euclidean projection onto the centered ball `‖x‖² ≤ radius_sq`.
pub fn project_ball(x: &[f64], radius_sq: f64) -> Result<Vec<f64>, SolverError> {
    if !linalg::all_finite(x) {
        return Err(SolverError::NonFinite("projection input"));
    }
    if !(radius_sq > 0.0) || !radius_sq.is_finite() {
        return Err(SolverError::InvalidParameter(format!(
            "ball radius² must be positive, got {radius_sq}"
        )));
    }
    let n2 = linalg::norm_sq(x);
    if n2 <= radius_sq {
        return Ok(x.to_vec());
    }
    let s = (radius_sq / n2).sqrt();
    Ok(linalg::scale(s, x))
}

/// Euclidean projection onto the half-space `{x : aᵀx ≤ b}`.
pub fn project_halfspace(x: &[f64], a: &[f64], b: f64) -> Vec<f64> {
    let viol = linalg::dot(a, x) - b;
    let a2 = linalg::norm_sq(a);
    if viol <= 0.0 || a2 == 0.0 {
        return x.to_vec();
    }
    let mut out = x.to_vec();
    linalg::axpy(-viol / a2, a, &mut out);
    out
}

/// Projection onto `ball ∩ ⋂_c {a_cᵀx ≤ b_c}` by Dykstra's alternating
/// projections; stops once a sweep moves the iterate less than `tol`.
pub fn project_ball_halfspaces(
    x: &[f64],
    radius_sq: f64,
    halfspaces: &[(Vec<f64>, f64)],
    tol: f64,
    max_sweeps: usize,
) -> Vec<f64> {
    let n = x.len();
    let sets = halfspaces.len() + 1;
    let mut corrections = vec![vec![0.0; n]; sets];
    let mut y = x.to_vec();
    for _ in 0..max_sweeps {
        let before = y.clone();
        for (k, corr) in corrections.iter_mut().enumerate() {
            let shifted: Vec<f64> = y.iter().zip(corr.iter()).map(|(a, b)| a + b).collect();
            let proj = if k == 0 {
                project_ball(&shifted, radius_sq).unwrap_or_else(|_| shifted.clone())
            } else {
                let (a, b) = &halfspaces[k - 1];
                project_halfspace(&shifted, a, *b)
            };
            for j in 0..n {
                corr[j] = shifted[j] - proj[j];
            }
            y = proj;
        }
        if linalg::dist(&before, &y) <= tol {
            break;
        }
    }
    y
}
