//! Empirical regret and violation against the closed-form bounds.

use std::fmt;
use std::fmt::Write as _;

use super::config::{ExperimentConfig, PolicyKind};
use super::experiment::{resolve_params, run_experiment, Instance};
use super::output::format_number;
use super::HarnessError;
use crate::bounds::{
    dynamic_regret_bound, dynamic_regret_bound_large_steps, rho, static_regret_bound, violation_bound,
    AssumptionConstants, BoundError,
};
use crate::metrics::{constraint_violation, duration_variation, dynamic_regret, static_regret};

/// Relative slack of the queue certificate comparison.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Hypotheses do not hold; carries the violated condition.
    Skip(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("PASS"),
            Verdict::Fail => f.write_str("FAIL"),
            Verdict::Skip(_) => f.write_str("SKIP"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub empirical: f64,
    pub bound: Option<f64>,
    pub verdict: Verdict,
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {}",
            self.verdict,
            self.name,
            format_number(self.empirical)
        )?;
        if let Some(b) = self.bound {
            write!(f, ", bound {}", format_number(b))?;
        }
        if let Verdict::Skip(why) = &self.verdict {
            write!(f, " ({why})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<BoundCheck>,
}

impl VerifyReport {
    /// No check failed; skipped checks do not count against the run.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn compare(name: &'static str, empirical: f64, bound: Result<f64, BoundError>) -> BoundCheck {
    match bound {
        Ok(b) => BoundCheck {
            name,
            empirical,
            bound: Some(b),
            verdict: if empirical <= b { Verdict::Pass } else { Verdict::Fail },
        },
        Err(e) => BoundCheck {
            name,
            empirical,
            bound: None,
            verdict: Verdict::Skip(e.to_string()),
        },
    }
}

pub const DYNAMIC: &str = "dynamic regret";
pub const DYNAMIC_MANY_STEPS: &str = "dynamic regret, contracting steps";
pub const STATIC: &str = "static regret";
pub const VIOLATION: &str = "constraint violation";
pub const CERTIFICATE: &str = "queue certificate";

/// Runs the algorithm on the configured problem and compares its regret and
/// violation with every applicable bound.
pub fn verify_bounds(cfg: &ExperimentConfig) -> Result<VerifyReport, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.policies = vec![PolicyKind::Pqga];
    let outcome = run_experiment(&cfg)?;
    let run = outcome.run(PolicyKind::Pqga).expect("pqga selected");
    if let Some(e) = &run.failure {
        return Err(HarnessError::PolicyFailed {
            policy: PolicyKind::Pqga,
            message: e.clone(),
        });
    }
    let trace = &run.trace;
    let re_dyn = dynamic_regret(trace, &outcome.dynamic_benchmark).map_err(HarnessError::metrics)?;
    let re_stat = static_regret(trace, &outcome.static_benchmark).map_err(HarnessError::metrics)?;
    let vo = constraint_violation(trace);
    let worst = vo.accumulated.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut checks = match &outcome.bounds {
        Some(b) => vec![
            compare(DYNAMIC, re_dyn, b.dynamic.clone()),
            compare(DYNAMIC_MANY_STEPS, re_dyn, b.dynamic_large_steps.clone()),
            compare(STATIC, re_stat, b.static_.clone()),
            compare(VIOLATION, worst, b.violation.clone()),
        ],
        None => {
            let why = match &outcome.constants {
                Err(e) => e.to_string(),
                Ok(_) => "bounds unavailable".to_string(),
            };
            [
                (DYNAMIC, re_dyn),
                (DYNAMIC_MANY_STEPS, re_dyn),
                (STATIC, re_stat),
                (VIOLATION, worst),
            ]
            .into_iter()
            .map(|(name, empirical)| BoundCheck {
                name,
                empirical,
                bound: None,
                verdict: Verdict::Skip(why.clone()),
            })
            .collect()
        }
    };
    let certificate = vo.certificate.expect("queue policy records its final queue");
    checks.push(BoundCheck {
        name: CERTIFICATE,
        empirical: worst,
        bound: Some(certificate),
        verdict: if vo.certified(CERTIFICATE_TOLERANCE) == Some(true) {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    });
    Ok(VerifyReport { seed: cfg.seed, checks })
}

/// Bound values computable before running: the violation and static regret
/// bounds, and the dynamic bounds as affine functions of the path length
/// `Π_x°` (and of `Π_∇` for the contracting-steps bound).
pub fn bounds_summary(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    cfg.validate()?;
    let schedule = cfg
        .schedule
        .build(cfg.horizon)
        .map_err(|e| HarnessError::Solver(e.into()))?;
    let instance = Instance::build(cfg)?;
    let k = instance.problem().constants();
    let c = AssumptionConstants::new(k, schedule.max_duration()).map_err(HarnessError::Params)?;
    let p = resolve_params(cfg, Ok(&c), schedule.horizon())?;
    let t = schedule.horizon();
    let pi_t = duration_variation(&schedule);
    let xi = cfg.algorithm.xi.unwrap_or(k.smoothness);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "horizon T = {t}, periods I = {}, T_max = {}",
        schedule.num_periods(),
        c.t_max
    );
    let _ = writeln!(
        out,
        "alpha = {}, eta = {}, gamma = {}, J = {}, rho = {}",
        format_number(p.alpha),
        format_number(p.eta),
        format_number(p.gamma),
        p.steps,
        format_number(rho(&c, &p))
    );
    let _ = writeln!(
        out,
        "constants: D = {}, L = {}, varrho = {}, beta = {}, G = {}, epsilon = {}, R = {}",
        format_number(k.gradient_bound),
        format_number(k.smoothness),
        format_number(k.strong_convexity),
        format_number(k.constraint_lipschitz),
        format_number(k.constraint_bound),
        format_number(k.slater_margin),
        format_number(k.diameter)
    );
    let _ = writeln!(out, "duration variation Pi_T = {}", format_number(pi_t));
    let show = |r: Result<f64, BoundError>| match r {
        Ok(v) => format_number(v),
        Err(e) => format!("unavailable ({e})"),
    };
    let _ = writeln!(out, "{STATIC} <= {}", show(static_regret_bound(&c, &p, pi_t, t)));
    let _ = writeln!(out, "{VIOLATION} <= {}", show(violation_bound(&c, &p)));
    let _ = match (
        dynamic_regret_bound(&c, &p, 0.0, pi_t, t),
        dynamic_regret_bound(&c, &p, 1.0, pi_t, t),
    ) {
        (Ok(a), Ok(b)) => writeln!(
            out,
            "{DYNAMIC} <= {} + {} * Pi_x",
            format_number(a),
            format_number(b - a)
        ),
        (Err(e), _) | (_, Err(e)) => writeln!(out, "{DYNAMIC} unavailable ({e})"),
    };
    let many = |path: f64, grad: f64| dynamic_regret_bound_large_steps(&c, &p, path, pi_t, grad, xi);
    let _ = match (many(0.0, 0.0), many(1.0, 0.0)) {
        (Ok(a), Ok(b)) => writeln!(
            out,
            "{DYNAMIC_MANY_STEPS} <= {} + {} * Pi_x + Pi_grad / {}",
            format_number(a),
            format_number(b - a),
            format_number(4.0 * xi)
        ),
        (Err(e), _) | (_, Err(e)) => writeln!(out, "{DYNAMIC_MANY_STEPS} unavailable ({e})"),
    };
    Ok(out)
}
