//! Clairvoyant benchmarks and the comparison policies built on them.

use crate::error::SolverError;
use crate::linalg;
use crate::metrics::{evaluate_decisions, RunTrace};
use crate::pqga::{run_queue_policy, PqgaParams, RunError, UpdateMode};
use crate::problem::Problem;
use crate::schedule::PeriodSchedule;

pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_ORACLE_MAX_ITERS: usize = 200_000;

/// A minimizer of a weighted sum of losses over the feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub point: Vec<f64>,
    pub objective: f64,
    pub solver_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_ORACLE_TOLERANCE,
            max_iters: DEFAULT_ORACLE_MAX_ITERS,
        }
    }
}

/// `Σ_k w_k f_{slot_k}(x)`.
pub fn weighted_objective<P: Problem>(problem: &P, terms: &[(usize, f64)], x: &[f64]) -> f64 {
    terms.iter().map(|&(s, w)| w * problem.loss(s, x)).sum()
}

fn weighted_gradient<P: Problem>(problem: &P, terms: &[(usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    for &(s, w) in terms {
        linalg::axpy(w, &problem.loss_gradient(s, x), &mut grad);
    }
    grad
}

/// Minimizes `Σ_k w_k f_{slot_k}` over the feasible set, through the
/// problem's specialized solver if it has one, else by projected gradient
/// with step `1/(2 L Σ w)`.
pub fn minimize_weighted<P: Problem>(
    problem: &P,
    terms: &[(usize, f64)],
    opts: &OracleOptions,
) -> Result<OracleSolution, SolverError> {
    if terms.is_empty() {
        return Err(SolverError::EmptyFeedback { period: 0 });
    }
    if let Some(sol) = problem.minimize_weighted_loss(terms, opts.tolerance) {
        return sol;
    }
    let total: f64 = terms.iter().map(|t| t.1).sum();
    let step = 1.0 / (2.0 * problem.constants().smoothness * total);
    let mut x = problem.project_feasible(&vec![0.0; problem.dim()]);
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iters {
        let grad = weighted_gradient(problem, terms, &x);
        let mut y = x.clone();
        linalg::axpy(-step, &grad, &mut y);
        let next = problem.project_feasible(&y);
        residual = linalg::dist(&x, &next);
        if !residual.is_finite() {
            return Err(SolverError::NonFinite("oracle iterate"));
        }
        if residual <= opts.tolerance {
            let objective = weighted_objective(problem, terms, &x);
            return Ok(OracleSolution {
                point: x,
                objective,
                solver_residual: residual,
                iterations: it,
            });
        }
        x = next;
    }
    Err(SolverError::Oracle {
        iterations: opts.max_iters,
        residual,
    })
}

/// `(slot, T_i/S_i)` for every feedback delivered for period `i`.
pub fn period_terms(schedule: &PeriodSchedule, i: usize) -> Vec<(usize, f64)> {
    let slots = schedule.delivered_slots(i);
    let w = schedule.duration(i) as f64 / slots.len().max(1) as f64;
    slots.into_iter().map(|s| (s, w)).collect()
}

/// The dynamic benchmark `x_i°`.
pub fn per_period_optimizer<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    i: usize,
    opts: &OracleOptions,
) -> Result<OracleSolution, SolverError> {
    let terms = period_terms(schedule, i);
    if terms.is_empty() {
        return Err(SolverError::EmptyFeedback { period: i });
    }
    minimize_weighted(problem, &terms, opts)
}

/// `x_i°` for every period; `None` where no feedback arrived.
pub fn per_period_benchmarks<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    opts: &OracleOptions,
) -> Result<Vec<Option<OracleSolution>>, SolverError> {
    (0..schedule.num_periods())
        .map(|i| {
            if schedule.delivered_count(i) == 0 {
                Ok(None)
            } else {
                per_period_optimizer(problem, schedule, i, opts).map(Some)
            }
        })
        .collect()
}

/// The static benchmark `x*` over all delivered feedback.
pub fn offline_fixed_optimizer<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    opts: &OracleOptions,
) -> Result<OracleSolution, SolverError> {
    let terms: Vec<(usize, f64)> = (0..schedule.num_periods())
        .flat_map(|i| period_terms(schedule, i))
        .collect();
    minimize_weighted(problem, &terms, opts)
}

/// Decisions `x_i°`, holding the previous decision through starved periods.
pub fn per_period_policy(benchmarks: &[Option<OracleSolution>], x0: &[f64]) -> Vec<Vec<f64>> {
    let mut current = x0.to_vec();
    benchmarks
        .iter()
        .map(|b| {
            if let Some(b) = b {
                current = b.point.clone();
            }
            current.clone()
        })
        .collect()
}

/// Decisions `x_{i−1}°`, starting from `x0`.
pub fn delayed_optimal_policy(benchmarks: &[Option<OracleSolution>], x0: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(benchmarks.len());
    let mut current = x0.to_vec();
    for b in benchmarks {
        out.push(current.clone());
        if let Some(b) = b {
            current = b.point.clone();
        }
    }
    out
}

/// One super-slot update: the queue method applied to a whole period as if
/// it were a single slot, with the mean delivered gradient and no descent
/// steps.
pub fn superslot_baseline_step<P: Problem>(
    problem: &P,
    state: &crate::pqga::PqgaState,
    slots: &[usize],
    params: &PqgaParams,
) -> Result<(crate::pqga::PqgaState, crate::pqga::StepReport), SolverError> {
    crate::pqga::pqga_update(problem, state, slots, 1, 1, &params.with_steps(0))
}

/// Runs the super-slot baseline over the schedule.
pub fn run_superslot<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    params: &PqgaParams,
    x0: Vec<f64>,
) -> Result<RunTrace, RunError> {
    run_queue_policy(problem, schedule, params, x0, "superslot", UpdateMode::SuperSlot)
}

/// Trace of the per-period optimal policy.
pub fn run_per_period<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    benchmarks: &[Option<OracleSolution>],
    x0: &[f64],
) -> RunTrace {
    evaluate_decisions(problem, schedule, "per_period", &per_period_policy(benchmarks, x0))
}

/// Trace of the one-period-delayed optimal policy.
pub fn run_delayed<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    benchmarks: &[Option<OracleSolution>],
    x0: &[f64],
) -> RunTrace {
    evaluate_decisions(problem, schedule, "delayed", &delayed_optimal_policy(benchmarks, x0))
}

/// Trace of the fixed offline decision.
pub fn run_offline<P: Problem>(problem: &P, schedule: &PeriodSchedule, offline: &OracleSolution) -> RunTrace {
    let decisions = vec![offline.point.clone(); schedule.num_periods()];
    evaluate_decisions(problem, schedule, "offline", &decisions)
}
