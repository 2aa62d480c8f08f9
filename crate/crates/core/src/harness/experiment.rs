//! Seeded experiment execution over a shared problem realization.

use log::{info, warn};

use super::config::{ExperimentConfig, ParamSource, PolicyKind, ProblemKind};
use super::HarnessError;
use crate::bounds::{bound_report, select_params, AssumptionConstants, BoundError, BoundReport};
use crate::metrics::{benchmark_losses, variation_measures, RunTrace, VariationMeasures};
use crate::mimo::problem::MimoProblem;
use crate::oracles::{
    offline_fixed_optimizer, per_period_benchmarks, per_period_policy, run_delayed, run_offline, run_per_period,
    run_superslot, OracleOptions, OracleSolution,
};
use crate::pqga::{run_pqga, PqgaParams};
use crate::problem::Problem;
use crate::schedule::PeriodSchedule;
use crate::synthetic::SyntheticProblem;

/// One generated problem realization.
#[derive(Debug, Clone)]
pub enum Instance {
    Synthetic(SyntheticProblem),
    Mimo(MimoProblem),
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let p = &cfg.problem;
        Ok(match p.kind {
            ProblemKind::Synthetic => {
                let s =
                    SyntheticProblem::generate(&p.synthetic, cfg.horizon, cfg.seed).map_err(HarnessError::Solver)?;
                Instance::Synthetic(if p.loose_constraints { s.loosen_constraints() } else { s })
            }
            ProblemKind::Mimo => {
                let m = MimoProblem::simulate(&p.mimo, cfg.horizon, cfg.seed, p.scaling)
                    .map_err(|e| HarnessError::Solver(e.into()))?;
                Instance::Mimo(match p.channel_bound {
                    Some(b) => m.with_channel_bound(b),
                    None => m,
                })
            }
        })
    }

    pub fn problem(&self) -> &dyn Problem {
        match self {
            Instance::Synthetic(p) => p,
            Instance::Mimo(p) => p,
        }
    }
}

/// Step sizes for the configured prescription.
pub fn resolve_params(
    cfg: &ExperimentConfig,
    constants: Result<&AssumptionConstants, &BoundError>,
    horizon: usize,
) -> Result<PqgaParams, HarnessError> {
    let alg = &cfg.algorithm;
    match alg.source()? {
        ParamSource::Manual(p) => Ok(p),
        ParamSource::Corollary {
            corollary,
            exponents,
            target,
            steps,
        } => {
            let c = constants.map_err(|e| HarnessError::Params(e.clone()))?;
            let p = select_params(c, corollary, horizon, &exponents, target, steps).map_err(HarnessError::Params)?;
            Ok(p.with_inner(alg.inner_tolerance, alg.inner_max_iters))
        }
    }
}

/// A policy trace, possibly cut short by a solver failure.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub kind: PolicyKind,
    pub trace: RunTrace,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub schedule: PeriodSchedule,
    pub constants: Result<AssumptionConstants, BoundError>,
    pub params: PqgaParams,
    pub benchmarks: Vec<Option<OracleSolution>>,
    pub offline: OracleSolution,
    /// Weighted loss of `x_i°` in each period.
    pub dynamic_benchmark: Vec<Option<f64>>,
    /// Weighted loss of `x*` in each period.
    pub static_benchmark: Vec<Option<f64>>,
    pub variation: VariationMeasures,
    pub bounds: Option<BoundReport>,
    pub runs: Vec<PolicyRun>,
}

impl ExperimentOutcome {
    pub fn run(&self, kind: PolicyKind) -> Option<&PolicyRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }

    pub fn failed(&self) -> bool {
        self.runs.iter().any(|r| r.failure.is_some())
    }

    pub fn initial_decision(&self) -> Vec<f64> {
        vec![0.0; self.instance.problem().dim()]
    }
}

/// Runs every selected policy on one realization of the configured problem.
///
/// Every policy starts from the zero decision and sees the same feedback.
/// Oracle failures abort the whole experiment; a policy failure is recorded
/// with its partial trace.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let schedule = cfg
        .schedule
        .build(cfg.horizon)
        .map_err(|e| HarnessError::Solver(e.into()))?;
    let instance = Instance::build(cfg)?;
    let problem = instance.problem();
    let constants = AssumptionConstants::new(problem.constants(), schedule.max_duration());
    if let Err(e) = &constants {
        warn!("assumption constants unavailable: {e}");
    }
    let params = resolve_params(cfg, constants.as_ref(), schedule.horizon())?;
    info!(
        "seed {}: {} periods, α = {:.6e}, η = {:.6e}, γ = {:.6e}, J = {}",
        cfg.seed,
        schedule.num_periods(),
        params.alpha,
        params.eta,
        params.gamma,
        params.steps
    );

    let opts = OracleOptions {
        tolerance: cfg.algorithm.oracle_tolerance,
        max_iters: cfg.algorithm.oracle_max_iters,
    };
    let benchmarks = per_period_benchmarks(&problem, &schedule, &opts).map_err(HarnessError::Solver)?;
    let offline = offline_fixed_optimizer(&problem, &schedule, &opts).map_err(HarnessError::Solver)?;
    let x0 = vec![0.0; problem.dim()];

    let dyn_points: Vec<Option<&[f64]>> = benchmarks
        .iter()
        .map(|b| b.as_ref().map(|b| b.point.as_slice()))
        .collect();
    let dynamic_benchmark = benchmark_losses(&problem, &schedule, &dyn_points);
    let static_points = vec![Some(offline.point.as_slice()); schedule.num_periods()];
    let static_benchmark = benchmark_losses(&problem, &schedule, &static_points);
    let variation = variation_measures(&problem, &schedule, &per_period_policy(&benchmarks, &x0))
        .map_err(|e| HarnessError::Solver(crate::SolverError::InvalidParameter(e.to_string())))?;
    let bounds = constants
        .as_ref()
        .ok()
        .map(|c| bound_report(c, &params, variation, schedule.horizon(), cfg.algorithm.xi));

    let mut runs = Vec::with_capacity(cfg.policies.len());
    for &kind in &cfg.policies {
        let result = match kind {
            PolicyKind::Pqga => run_pqga(&problem, &schedule, &params, x0.clone()),
            PolicyKind::Superslot => run_superslot(&problem, &schedule, &params, x0.clone()),
            PolicyKind::PerPeriod => Ok(run_per_period(&problem, &schedule, &benchmarks, &x0)),
            PolicyKind::Delayed => Ok(run_delayed(&problem, &schedule, &benchmarks, &x0)),
            PolicyKind::Offline => Ok(run_offline(&problem, &schedule, &offline)),
        };
        runs.push(match result {
            Ok(trace) => PolicyRun {
                kind,
                trace,
                failure: None,
            },
            Err(e) => {
                warn!("{kind} failed: {e}");
                PolicyRun {
                    kind,
                    failure: Some(e.error.to_string()),
                    trace: e.partial,
                }
            }
        });
    }

    Ok(ExperimentOutcome {
        config: cfg.clone(),
        schedule,
        constants,
        params,
        benchmarks,
        offline,
        dynamic_benchmark,
        static_benchmark,
        variation,
        bounds,
        runs,
        instance,
    })
}
