//! Periodic queueing and gradient aggregation.
//!
//! At the start of every period `i+1` the solver
//!
//! 1. updates the periodic virtual queue with the constraint value of `x_i`,
//! 2. runs `J` projected descent steps on the aggregated gradient of the
//!    feedbacks delivered during period `i`, starting from `x_i`,
//! 3. solves a strongly convex subproblem regularized towards both the
//!    descent end point and `x_i`, penalizing `g` with the queue weights.

use crate::error::SolverError;
use crate::linalg;
use crate::metrics::{RunTrace, TraceBuilder};
use crate::problem::{Problem, Subproblem};
use crate::schedule::PeriodSchedule;

pub const DEFAULT_INNER_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_INNER_MAX_ITERS: usize = 10_000;

/// Algorithm parameters `α`, `η`, `γ`, `J` plus inner-solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqgaParams {
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub steps: usize,
    pub inner_tolerance: f64,
    pub inner_max_iters: usize,
}

impl PqgaParams {
    pub fn new(alpha: f64, eta: f64, gamma: f64, steps: usize) -> Result<Self, SolverError> {
        let p = Self {
            alpha,
            eta,
            gamma,
            steps,
            inner_tolerance: DEFAULT_INNER_TOLERANCE,
            inner_max_iters: DEFAULT_INNER_MAX_ITERS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_inner(mut self, tolerance: f64, max_iters: usize) -> Self {
        self.inner_tolerance = tolerance;
        self.inner_max_iters = max_iters;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [("alpha", self.alpha), ("eta", self.eta), ("gamma", self.gamma)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.inner_tolerance > 0.0) || self.inner_max_iters == 0 {
            return Err(SolverError::InvalidParameter(
                "inner solver needs a positive tolerance and iteration budget".into(),
            ));
        }
        Ok(())
    }

    /// Contraction factor `ρ = (α − ϱ)/(α + ϱ)` of one descent step.
    pub fn rho(&self, strong_convexity: f64) -> f64 {
        (self.alpha - strong_convexity) / (self.alpha + strong_convexity)
    }
}

/// Periodic virtual queue `Q_i ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    values: Vec<f64>,
    period: usize,
}

impl QueueState {
    pub fn zeros(constraints: usize) -> Self {
        Self {
            values: vec![0.0; constraints],
            period: 0,
        }
    }

    pub fn from_values(values: Vec<f64>, period: usize) -> Result<Self, SolverError> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SolverError::InvalidParameter(
                "queue entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { values, period })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.values)
    }
}

/// `Q_{i+1}^c = max{−γT_i g^c, Q_i^c + γT_i g^c}`.
pub fn queue_update(queue: &QueueState, g: &[f64], gamma: f64, duration: usize) -> Result<QueueState, SolverError> {
    if !linalg::all_finite(g) {
        return Err(SolverError::NonFinite("constraint value"));
    }
    if g.len() != queue.values.len() {
        return Err(SolverError::DimensionMismatch {
            expected: queue.values.len(),
            got: g.len(),
        });
    }
    let t = duration as f64;
    let values = queue
        .values
        .iter()
        .zip(g)
        .map(|(q, gc)| {
            let s = gamma * t * gc;
            (-s).max(q + s)
        })
        .collect();
    Ok(QueueState {
        values,
        period: queue.period + 1,
    })
}

/// `(T_i/S_i) Σ_s ∇f_s`, summed in the given order.
pub fn aggregated_gradient(gradients: &[Vec<f64>], duration: usize) -> Result<Vec<f64>, SolverError> {
    let first = gradients.first().ok_or(SolverError::EmptyFeedback { period: 0 })?;
    let mut sum = vec![0.0; first.len()];
    for g in gradients {
        if g.len() != sum.len() {
            return Err(SolverError::DimensionMismatch {
                expected: sum.len(),
                got: g.len(),
            });
        }
        linalg::axpy(1.0, g, &mut sum);
    }
    let w = duration as f64 / gradients.len() as f64;
    Ok(linalg::scale(w, &sum))
}

/// Aggregated gradient of the losses at `slots`, evaluated at `x`.
pub fn aggregated_gradient_at<P: Problem>(
    problem: &P,
    slots: &[usize],
    duration: usize,
    x: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let grads: Vec<Vec<f64>> = slots.iter().map(|&s| problem.loss_gradient(s, x)).collect();
    let agg = aggregated_gradient(&grads, duration)?;
    if !linalg::all_finite(&agg) {
        return Err(SolverError::NonFinite("aggregated gradient"));
    }
    Ok(agg)
}

/// `J` projected steps `x̃ʲ = P_X0(x̃ʲ⁻¹ − (1/2α) agg(x̃ʲ⁻¹))` from `x̃⁰ = x_i`.
pub fn multi_step_descent<P: Problem>(
    problem: &P,
    start: &[f64],
    slots: &[usize],
    duration: usize,
    params: &PqgaParams,
) -> Result<Vec<f64>, SolverError> {
    let mut x = start.to_vec();
    for _ in 0..params.steps {
        x = match problem.descent_step(&x, slots, duration, params.alpha) {
            Some(r) => r?,
            None => {
                let agg = aggregated_gradient_at(problem, slots, duration, &x)?;
                let mut y = x.clone();
                linalg::axpy(-1.0 / (2.0 * params.alpha), &agg, &mut y);
                problem.project_base(&y)
            }
        };
        if !linalg::all_finite(&x) {
            return Err(SolverError::NonFinite("descent iterate"));
        }
    }
    Ok(x)
}

/// Result of the per-period subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub closed_form: bool,
}

fn subproblem_gradient<P: Problem>(problem: &P, sub: &Subproblem<'_>, weights: &[f64], x: &[f64]) -> Vec<f64> {
    let mut grad = sub.gradient.to_vec();
    for j in 0..x.len() {
        grad[j] += 2.0 * sub.alpha * (x[j] - sub.anchor[j]) + 2.0 * sub.eta * (x[j] - sub.previous[j]);
    }
    if weights.iter().any(|w| *w != 0.0) {
        for (w, gc) in weights.iter().zip(problem.constraint_gradients(x)) {
            linalg::axpy(*w, &gc, &mut grad);
        }
    }
    grad
}

/// Objective value of the subproblem at `x`.
pub fn subproblem_objective<P: Problem>(problem: &P, sub: &Subproblem<'_>, x: &[f64]) -> f64 {
    let lin = linalg::dot(sub.gradient, &linalg::sub(x, sub.anchor));
    let reg = sub.alpha * linalg::dist_sq(x, sub.anchor) + sub.eta * linalg::dist_sq(x, sub.previous);
    let pen = linalg::dot(&sub.penalty_weights(), &problem.constraints(x));
    lin + reg + pen
}

/// Projected-gradient residual `‖x − P_X0(x − step ∇obj(x))‖` of the
/// subproblem, with the step used by the generic inner solver.
pub fn subproblem_residual<P: Problem>(problem: &P, sub: &Subproblem<'_>, x: &[f64]) -> f64 {
    let weights = sub.penalty_weights();
    let step = inner_step(problem, sub, &weights);
    let grad = subproblem_gradient(problem, sub, &weights, x);
    let mut y = x.to_vec();
    linalg::axpy(-step, &grad, &mut y);
    linalg::dist(x, &problem.project_base(&y))
}

fn inner_step<P: Problem>(problem: &P, sub: &Subproblem<'_>, weights: &[f64]) -> f64 {
    let curvature: f64 = weights.iter().map(|w| w.abs()).sum::<f64>() * problem.constraint_curvature();
    1.0 / (2.0 * (sub.alpha + sub.eta) + curvature)
}

/// Projected gradient on the `2(α+η)`-strongly convex subproblem.
pub fn solve_subproblem_generic<P: Problem>(
    problem: &P,
    sub: &Subproblem<'_>,
    tolerance: f64,
    max_iters: usize,
) -> Result<SubproblemSolution, SolverError> {
    let weights = sub.penalty_weights();
    let step = inner_step(problem, sub, &weights);
    let mut x = problem.project_base(sub.anchor);
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        let grad = subproblem_gradient(problem, sub, &weights, &x);
        let mut y = x.clone();
        linalg::axpy(-step, &grad, &mut y);
        let next = problem.project_base(&y);
        residual = linalg::dist(&x, &next);
        if !residual.is_finite() {
            return Err(SolverError::NonFinite("subproblem iterate"));
        }
        if residual <= tolerance {
            return Ok(SubproblemSolution {
                point: x,
                iterations: it,
                residual,
                closed_form: false,
            });
        }
        x = next;
    }
    Err(SolverError::InnerSolver {
        iterations: max_iters,
        residual,
        last: x,
    })
}

/// Solves the per-period subproblem, using the problem's closed form when it
/// has one.
pub fn solve_period_subproblem<P: Problem>(
    problem: &P,
    sub: &Subproblem<'_>,
    params: &PqgaParams,
) -> Result<SubproblemSolution, SolverError> {
    if let Some(point) = problem.solve_subproblem(sub) {
        let point = point?;
        if !linalg::all_finite(&point) {
            return Err(SolverError::NonFinite("closed-form decision"));
        }
        return Ok(SubproblemSolution {
            point,
            iterations: 0,
            residual: 0.0,
            closed_form: true,
        });
    }
    solve_subproblem_generic(problem, sub, params.inner_tolerance, params.inner_max_iters)
}

/// Solver state at the start of a period: `x_i`, `Q_i`, `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PqgaState {
    pub decision: Vec<f64>,
    pub queue: QueueState,
    pub period: usize,
}

impl PqgaState {
    pub fn initial<P: Problem>(problem: &P, x0: Vec<f64>) -> Result<Self, SolverError> {
        if x0.len() != problem.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: problem.dim(),
                got: x0.len(),
            });
        }
        let projected = problem.project_base(&x0);
        if linalg::dist(&projected, &x0) > 1e-9 * (1.0 + linalg::norm(&x0)) {
            return Err(SolverError::InvalidParameter(
                "initial decision lies outside the base set".into(),
            ));
        }
        Ok(Self {
            decision: x0,
            queue: QueueState::zeros(problem.constraint_dim()),
            period: 0,
        })
    }
}

/// What happened at one period boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Period whose feedback was consumed.
    pub period: usize,
    pub g_previous: Vec<f64>,
    pub queue_norm: f64,
    /// End point `x̃ᴶ` of the descent steps.
    pub descent_end: Vec<f64>,
    pub inner_iterations: usize,
    pub held: bool,
}

/// One boundary update with explicit durations `T_i` and `T_{i+1}`.
pub fn pqga_update<P: Problem>(
    problem: &P,
    state: &PqgaState,
    slots: &[usize],
    duration: usize,
    next_duration: usize,
    params: &PqgaParams,
) -> Result<(PqgaState, StepReport), SolverError> {
    let g_prev = problem.constraints(&state.decision);
    let queue_next = queue_update(&state.queue, &g_prev, params.gamma, duration)?;

    if slots.is_empty() {
        log::info!("period {}: no feedback delivered, holding decision", state.period);
        let report = StepReport {
            period: state.period,
            g_previous: g_prev,
            queue_norm: queue_next.norm(),
            descent_end: state.decision.clone(),
            inner_iterations: 0,
            held: true,
        };
        let next = PqgaState {
            decision: state.decision.clone(),
            queue: queue_next,
            period: state.period + 1,
        };
        return Ok((next, report));
    }

    let descent_end = multi_step_descent(problem, &state.decision, slots, duration, params)?;
    let gradient = aggregated_gradient_at(problem, slots, duration, &descent_end)?;
    let sub = Subproblem {
        anchor: &descent_end,
        previous: &state.decision,
        gradient: &gradient,
        slots,
        duration,
        next_duration,
        queue_next: queue_next.values(),
        g_previous: &g_prev,
        alpha: params.alpha,
        eta: params.eta,
        gamma: params.gamma,
    };
    let solution = solve_period_subproblem(problem, &sub, params)?;
    let report = StepReport {
        period: state.period,
        g_previous: g_prev,
        queue_norm: queue_next.norm(),
        descent_end,
        inner_iterations: solution.iterations,
        held: false,
    };
    Ok((
        PqgaState {
            decision: solution.point,
            queue: queue_next,
            period: state.period + 1,
        },
        report,
    ))
}

/// One step at the end of `state.period`, using the schedule's delivered
/// feedback and durations.
pub fn pqga_step<P: Problem>(
    problem: &P,
    state: &PqgaState,
    schedule: &PeriodSchedule,
    params: &PqgaParams,
) -> Result<(PqgaState, StepReport), SolverError> {
    let i = state.period;
    if i >= schedule.num_periods() {
        return Err(SolverError::InvalidParameter(format!(
            "period {i} beyond schedule of {} periods",
            schedule.num_periods()
        )));
    }
    let slots = schedule.delivered_slots(i);
    pqga_update(
        problem,
        state,
        &slots,
        schedule.duration(i),
        schedule.next_duration(i),
        params,
    )
}

/// A failed run with everything recorded up to the failure.
#[derive(Debug, Clone)]
pub struct RunError {
    pub error: SolverError,
    pub partial: RunTrace,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} periods)", self.error, self.partial.periods.len())
    }
}

impl std::error::Error for RunError {}

/// How each boundary is turned into an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum UpdateMode {
    Periodic,
    SuperSlot,
}

pub(crate) fn run_queue_policy<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    params: &PqgaParams,
    x0: Vec<f64>,
    policy: &str,
    mode: UpdateMode,
) -> Result<RunTrace, RunError> {
    let mut builder = TraceBuilder::new(problem, schedule, policy);
    builder.set_gamma(params.gamma);
    let mut state = match PqgaState::initial(problem, x0) {
        Ok(s) => s,
        Err(error) => {
            return Err(RunError {
                error,
                partial: builder.finish(),
            })
        }
    };
    let params = match mode {
        UpdateMode::Periodic => *params,
        UpdateMode::SuperSlot => params.with_steps(0),
    };
    let periods = schedule.num_periods();
    for i in 0..periods {
        builder.push(&state.decision, Some(state.queue.values()), false);
        if i + 1 == periods {
            let g = problem.constraints(&state.decision);
            let t = match mode {
                UpdateMode::Periodic => schedule.duration(i),
                UpdateMode::SuperSlot => 1,
            };
            match queue_update(&state.queue, &g, params.gamma, t) {
                Ok(q) => builder.set_final_queue(q.values().to_vec()),
                Err(error) => {
                    return Err(RunError {
                        error,
                        partial: builder.finish(),
                    })
                }
            }
            break;
        }
        let step = match mode {
            UpdateMode::Periodic => pqga_step(problem, &state, schedule, &params),
            UpdateMode::SuperSlot => {
                let slots = schedule.delivered_slots(i);
                pqga_update(problem, &state, &slots, 1, 1, &params)
            }
        };
        match step {
            Ok((next, report)) => {
                builder.mark_held_next(report.held);
                builder.push_report(report);
                state = next;
            }
            Err(error) => {
                return Err(RunError {
                    error,
                    partial: builder.finish(),
                })
            }
        }
    }
    Ok(builder.finish())
}

/// Runs the algorithm over the whole schedule from `x0` with `Q_0 = 0`.
///
/// Decisions are produced for every period; after the last period only the
/// queue is advanced, giving `Q_I`.
pub fn run_pqga<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    params: &PqgaParams,
    x0: Vec<f64>,
) -> Result<RunTrace, RunError> {
    run_queue_policy(problem, schedule, params, x0, "pqga", UpdateMode::Periodic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{project_ball, ProblemConstants};

    /// 1-D test problem on [−1, 1] with quadratic losses `(x − c_t)²` and an
    /// optional constraint `g(x) = x − offset`.
    struct Line {
        targets: Vec<f64>,
        constraint: Option<f64>,
    }

    impl Problem for Line {
        fn dim(&self) -> usize {
            1
        }
        fn constraint_dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> usize {
            self.targets.len()
        }
        fn loss(&self, slot: usize, x: &[f64]) -> f64 {
            (x[0] - self.targets[slot]).powi(2)
        }
        fn loss_gradient(&self, slot: usize, x: &[f64]) -> Vec<f64> {
            vec![2.0 * (x[0] - self.targets[slot])]
        }
        fn constraints(&self, x: &[f64]) -> Vec<f64> {
            vec![match self.constraint {
                Some(off) => x[0] - off,
                None => 0.0,
            }]
        }
        fn constraint_gradients(&self, _x: &[f64]) -> Vec<Vec<f64>> {
            vec![vec![if self.constraint.is_some() { 1.0 } else { 0.0 }]]
        }
        // Overstated on purpose so the inner solver needs several steps.
        fn constraint_curvature(&self) -> f64 {
            1.0
        }
        fn project_base(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0].clamp(-1.0, 1.0)]
        }
        fn project_feasible(&self, x: &[f64]) -> Vec<f64> {
            let hi = self.constraint.map_or(1.0, |o| o.min(1.0));
            vec![x[0].clamp(-1.0, hi)]
        }
        fn constants(&self) -> ProblemConstants {
            ProblemConstants {
                gradient_bound: 8.0,
                smoothness: 1.0,
                strong_convexity: 1.0,
                constraint_lipschitz: 1.0,
                constraint_bound: 2.0,
                slater_margin: 0.5,
                diameter: 2.0,
            }
        }
    }

    #[test]
    fn queue_update_examples() {
        let q = QueueState::zeros(2);
        let q1 = queue_update(&q, &[-1.0, 0.5], 1.0, 2).unwrap();
        assert_eq!(q1.values(), &[2.0, 1.0]);
        let q = QueueState::from_values(vec![3.0], 0).unwrap();
        assert_eq!(queue_update(&q, &[0.0], 0.5, 4).unwrap().values(), &[3.0]);
        let q = QueueState::from_values(vec![1.0], 0).unwrap();
        assert_eq!(queue_update(&q, &[-2.0], 1.0, 1).unwrap().values(), &[2.0]);
        assert!(queue_update(&q, &[f64::NAN], 1.0, 1).is_err());
    }

    #[test]
    fn aggregated_gradient_examples() {
        assert_eq!(aggregated_gradient(&[vec![1.0, -1.0]], 2).unwrap(), vec![2.0, -2.0]);
        assert_eq!(
            aggregated_gradient(&[vec![1.0, 0.0], vec![0.0, 1.0]], 4).unwrap(),
            vec![2.0, 2.0]
        );
        assert_eq!(aggregated_gradient(&[vec![0.0, 0.0]], 1).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            aggregated_gradient(&[], 3),
            Err(SolverError::EmptyFeedback { .. })
        ));
    }

    #[test]
    fn descent_examples() {
        let p = Line {
            targets: vec![0.0],
            constraint: None,
        };
        let params = PqgaParams::new(1.0, 1.0, 1.0, 0).unwrap();
        assert_eq!(multi_step_descent(&p, &[0.3], &[0], 1, &params).unwrap(), vec![0.3]);
        let params = params.with_steps(1);
        assert_eq!(multi_step_descent(&p, &[1.0], &[0], 1, &params).unwrap(), vec![0.0]);
        let p = Line {
            targets: vec![3.0],
            constraint: None,
        };
        assert_eq!(multi_step_descent(&p, &[1.0], &[0], 1, &params).unwrap(), vec![1.0]);
    }

    fn sub_for<'a>(gradient: &'a [f64], zero: &'a [f64], queue: &'a [f64], g_prev: &'a [f64]) -> Subproblem<'a> {
        Subproblem {
            anchor: zero,
            previous: zero,
            gradient,
            slots: &[],
            duration: 1,
            next_duration: 1,
            queue_next: queue,
            g_previous: g_prev,
            alpha: 1.0,
            eta: 1.0,
            gamma: 1.0,
        }
    }

    /// Brute-force minimizer of a 1-D objective over [−1, 1] at step `h`.
    fn grid_argmin(f: impl Fn(f64) -> f64, h: f64) -> f64 {
        let n = (2.0 / h).round() as i64;
        (0..=n)
            .map(|k| -1.0 + k as f64 * h)
            .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn subproblem_unconstrained_stationary_point() {
        let p = Line {
            targets: vec![0.0],
            constraint: None,
        };
        let zero = [0.0];
        let sub = sub_for(&[2.0], &zero, &[0.0], &[0.0]);
        let sol = solve_subproblem_generic(&p, &sub, 1e-12, 10_000).unwrap();
        assert!((sol.point[0] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn subproblem_with_affine_penalty_matches_grid() {
        // weight [Q + γT g(x_i)]·γT_{i+1} = 1 with g(x) = x
        let p = Line {
            targets: vec![0.0],
            constraint: Some(0.0),
        };
        let zero = [0.0];
        let sub = sub_for(&[2.0], &zero, &[1.0], &[0.0]);
        let sol = solve_subproblem_generic(&p, &sub, 1e-12, 10_000).unwrap();
        let grid = grid_argmin(|x| 2.0 * x + 2.0 * x * x + x, 1e-6);
        assert!((grid + 0.75).abs() < 1e-5);
        assert!((sol.point[0] + 0.75).abs() < 1e-5);
        assert!((sol.point[0] - grid).abs() < 1e-5);
    }

    #[test]
    fn subproblem_with_huge_penalty_clamps_to_boundary() {
        let p = Line {
            targets: vec![0.0],
            constraint: Some(0.0),
        };
        let zero = [0.0];
        let sub = sub_for(&[2.0], &zero, &[1000.0], &[0.0]);
        let sol = solve_subproblem_generic(&p, &sub, 1e-10, 100_000).unwrap();
        let grid = grid_argmin(|x| 2.0 * x + 2.0 * x * x + 1000.0 * x, 1e-6);
        assert_eq!(grid, -1.0);
        assert!((sol.point[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn inner_solver_reports_budget_exhaustion() {
        let p = Line {
            targets: vec![0.0],
            constraint: Some(0.0),
        };
        let zero = [0.0];
        let sub = sub_for(&[2.0], &zero, &[1.0], &[0.0]);
        match solve_subproblem_generic(&p, &sub, 1e-300, 3) {
            Err(SolverError::InnerSolver { iterations, last, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixed_point_with_zero_gradient_and_zero_penalty() {
        let p = Line {
            targets: vec![0.4; 4],
            constraint: None,
        };
        let schedule = PeriodSchedule::new(
            &[2, 2],
            &crate::schedule::FeedbackPattern::PeriodStart,
            &crate::schedule::DelayModel::Zero,
        )
        .unwrap();
        let params = PqgaParams::new(2.0, 1.0, 1.0, 3).unwrap();
        let state = PqgaState::initial(&p, vec![0.4]).unwrap();
        let (next, report) = pqga_step(&p, &state, &schedule, &params).unwrap();
        assert!((next.decision[0] - 0.4).abs() < 1e-9);
        assert!(!report.held);
    }

    #[test]
    fn single_step_replay_matches_hand_computation() {
        // J = 0, α = 2, η = 1, γ = 1, constant target 0.5, no constraint
        // x_{i+1} = x_i − (T/S)·2(x_i − 0.5) / (2(α+η)) with T = S = 1.
        let p = Line {
            targets: vec![0.5; 3],
            constraint: None,
        };
        let schedule = PeriodSchedule::new(
            &[1, 1, 1],
            &crate::schedule::FeedbackPattern::PeriodStart,
            &crate::schedule::DelayModel::Zero,
        )
        .unwrap();
        let params = PqgaParams::new(2.0, 1.0, 1.0, 0).unwrap().with_inner(1e-13, 100_000);
        let trace = run_pqga(&p, &schedule, &params, vec![-1.0]).unwrap();
        let mut x: f64 = -1.0;
        let mut expected = vec![x];
        for _ in 0..2 {
            x -= 2.0 * (x - 0.5) / 6.0;
            expected.push(x);
        }
        for (rec, e) in trace.periods.iter().zip(&expected) {
            assert!((rec.decision[0] - e).abs() < 1e-11, "{} vs {}", rec.decision[0], e);
        }
    }

    #[test]
    fn single_period_run_has_one_decision_and_final_queue() {
        let p = Line {
            targets: vec![0.0; 5],
            constraint: Some(-0.5),
        };
        let schedule = PeriodSchedule::new(
            &[5],
            &crate::schedule::FeedbackPattern::PeriodStart,
            &crate::schedule::DelayModel::Zero,
        )
        .unwrap();
        let params = PqgaParams::new(1.0, 1.0, 2.0, 1).unwrap();
        let trace = run_pqga(&p, &schedule, &params, vec![0.0]).unwrap();
        assert_eq!(trace.periods.len(), 1);
        assert_eq!(trace.periods[0].decision, vec![0.0]);
        // Q_1 = max(−γT g, γT g) with g = 0.5
        assert_eq!(trace.final_queue.as_deref(), Some(&[5.0][..]));
    }

    #[test]
    fn starved_period_holds_decision_but_updates_queue() {
        let p = Line {
            targets: vec![0.9; 6],
            constraint: Some(0.0),
        };
        let schedule = PeriodSchedule::new(
            &[2, 2, 2],
            &crate::schedule::FeedbackPattern::Offsets(vec![1]),
            &crate::schedule::DelayModel::Explicit(vec![vec![5], vec![0], vec![0]]),
        )
        .unwrap();
        let params = PqgaParams::new(1.0, 1.0, 1.0, 1).unwrap();
        let state = PqgaState::initial(&p, vec![0.5]).unwrap();
        let (next, report) = pqga_step(&p, &state, &schedule, &params).unwrap();
        assert!(report.held);
        assert_eq!(next.decision, vec![0.5]);
        assert_eq!(next.queue.values(), &[1.0]);
    }

    #[test]
    fn initial_point_outside_base_set_is_rejected() {
        let p = Line {
            targets: vec![0.0],
            constraint: None,
        };
        assert!(PqgaState::initial(&p, vec![2.0]).is_err());
        assert!(project_ball(&[1.0], 1.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn queue_laws_hold(
                q in prop::collection::vec(0.0f64..50.0, 3),
                g in prop::collection::vec(-5.0f64..5.0, 3),
                gamma in 0.01f64..10.0,
                t in 1usize..16,
            ) {
                let state = QueueState::from_values(q, 0).unwrap();
                let next = queue_update(&state, &g, gamma, t).unwrap();
                let s: Vec<f64> = g.iter().map(|gc| gamma * t as f64 * gc).collect();
                prop_assert!(next.values().iter().all(|v| *v >= 0.0));
                prop_assert!(next.values().iter().zip(&s).all(|(q, s)| q + s >= 0.0));
                prop_assert!(next.norm() >= linalg::norm(&s));
                prop_assert!(next.norm() <= state.norm() + linalg::norm(&s) + 1e-12);
            }
        }
    }
}
