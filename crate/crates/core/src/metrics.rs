//! Run traces and the accounting done on them: regret against the two
//! benchmarks, accumulated constraint violation with its queue certificate,
//! variation measures and application averages.

use thiserror::Error;

use crate::linalg;
use crate::pqga::{aggregated_gradient_at, StepReport};
use crate::problem::{AppSample, Problem};
use crate::schedule::PeriodSchedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: trace has {expected} periods, benchmark has {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("trace carries no application samples")]
    NoSamples,
}

/// One period of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub period: usize,
    pub start: usize,
    pub duration: usize,
    pub delivered: usize,
    pub decision: Vec<f64>,
    /// `(T_i/S_i) Σ_s f_s(x_i)`; `None` when nothing was delivered.
    pub weighted_loss: Option<f64>,
    pub constraint_values: Vec<f64>,
    /// `Q_i` at the start of the period, for queue-driven policies.
    pub queue: Option<Vec<f64>>,
    pub held: bool,
}

impl PeriodRecord {
    pub fn queue_norm(&self) -> Option<f64> {
        self.queue.as_deref().map(linalg::norm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub policy: String,
    pub periods: Vec<PeriodRecord>,
    /// `Q_I`, the queue after the last period.
    pub final_queue: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    /// One entry per slot when the problem provides application samples.
    pub samples: Vec<AppSample>,
    pub reports: Vec<StepReport>,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.periods.iter().map(|p| p.duration).sum()
    }

    pub fn decisions(&self) -> Vec<Vec<f64>> {
        self.periods.iter().map(|p| p.decision.clone()).collect()
    }
}

/// `(T_i/S_i) Σ_s f_s(x)` over the delivered feedback of period `i`.
pub fn weighted_period_loss<P: Problem>(problem: &P, schedule: &PeriodSchedule, i: usize, x: &[f64]) -> Option<f64> {
    let slots = schedule.delivered_slots(i);
    if slots.is_empty() {
        return None;
    }
    let sum: f64 = slots.iter().map(|&s| problem.loss(s, x)).sum();
    Some(schedule.duration(i) as f64 / slots.len() as f64 * sum)
}

/// Incrementally records periods of a run.
pub struct TraceBuilder<'a, P: Problem> {
    problem: &'a P,
    schedule: &'a PeriodSchedule,
    trace: RunTrace,
    held_next: bool,
}

impl<'a, P: Problem> TraceBuilder<'a, P> {
    pub fn new(problem: &'a P, schedule: &'a PeriodSchedule, policy: &str) -> Self {
        Self {
            problem,
            schedule,
            trace: RunTrace {
                policy: policy.to_string(),
                periods: Vec::with_capacity(schedule.num_periods()),
                final_queue: None,
                gamma: None,
                samples: Vec::new(),
                reports: Vec::new(),
            },
            held_next: false,
        }
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        self.trace.gamma = Some(gamma);
    }

    pub fn set_final_queue(&mut self, q: Vec<f64>) {
        self.trace.final_queue = Some(q);
    }

    pub fn mark_held_next(&mut self, held: bool) {
        self.held_next = held;
    }

    pub fn push_report(&mut self, report: StepReport) {
        self.trace.reports.push(report);
    }

    /// Records the decision active during the next period.
    pub fn push(&mut self, decision: &[f64], queue: Option<&[f64]>, held: bool) {
        let i = self.trace.periods.len();
        let held = held || std::mem::take(&mut self.held_next);
        for slot in self.schedule.slots(i) {
            if let Some(s) = self.problem.app_sample(slot, decision) {
                self.trace.samples.push(s);
            }
        }
        self.trace.periods.push(PeriodRecord {
            period: i,
            start: self.schedule.start(i),
            duration: self.schedule.duration(i),
            delivered: self.schedule.delivered_count(i),
            decision: decision.to_vec(),
            weighted_loss: weighted_period_loss(self.problem, self.schedule, i, decision),
            constraint_values: self.problem.constraints(decision),
            queue: queue.map(<[f64]>::to_vec),
            held,
        });
    }

    pub fn finish(self) -> RunTrace {
        self.trace
    }
}

/// Trace of a fixed decision sequence (one decision per period).
pub fn evaluate_decisions<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    policy: &str,
    decisions: &[Vec<f64>],
) -> RunTrace {
    let mut b = TraceBuilder::new(problem, schedule, policy);
    for d in decisions.iter().take(schedule.num_periods()) {
        b.push(d, None, false);
    }
    b.finish()
}

/// Weighted benchmark loss of every period at the given points.
pub fn benchmark_losses<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    points: &[Option<&[f64]>],
) -> Vec<Option<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| p.and_then(|x| weighted_period_loss(problem, schedule, i, x)))
        .collect()
}

fn regret_increments(trace: &RunTrace, bench: &[Option<f64>]) -> Result<Vec<f64>, MetricsError> {
    if bench.len() != trace.periods.len() {
        return Err(MetricsError::LengthMismatch {
            expected: trace.periods.len(),
            got: bench.len(),
        });
    }
    Ok(trace
        .periods
        .iter()
        .zip(bench)
        .map(|(p, b)| match (p.weighted_loss, b) {
            (Some(l), Some(b)) => l - b,
            _ => 0.0,
        })
        .collect())
}

/// Running regret after each period.
pub fn cumulative_regret(trace: &RunTrace, bench: &[Option<f64>]) -> Result<Vec<f64>, MetricsError> {
    let mut acc = 0.0;
    Ok(regret_increments(trace, bench)?
        .into_iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect())
}

/// `Σ_i (T_i/S_i) Σ_s [f_s(x_i) − f_s(x_i°)]`; periods without feedback
/// contribute nothing.
pub fn dynamic_regret(trace: &RunTrace, bench: &[Option<f64>]) -> Result<f64, MetricsError> {
    Ok(regret_increments(trace, bench)?.iter().sum())
}

/// Same as [`dynamic_regret`] with the fixed offline point as benchmark.
pub fn static_regret(trace: &RunTrace, bench: &[Option<f64>]) -> Result<f64, MetricsError> {
    dynamic_regret(trace, bench)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    /// `VO^c = Σ_i T_i g^c(x_i)`.
    pub accumulated: Vec<f64>,
    /// `‖Q_I‖/γ` when the trace carries the final queue.
    pub certificate: Option<f64>,
}

impl ViolationReport {
    /// Whether every `VO^c` lies below the certificate, to `rel` relative.
    pub fn certified(&self, rel: f64) -> Option<bool> {
        self.certificate
            .map(|c| self.accumulated.iter().all(|v| *v <= c + rel * c.abs().max(v.abs())))
    }
}

/// Running `VO^c` after each period.
pub fn cumulative_violation(trace: &RunTrace) -> Vec<Vec<f64>> {
    let c = trace.periods.first().map_or(0, |p| p.constraint_values.len());
    let mut acc = vec![0.0; c];
    trace
        .periods
        .iter()
        .map(|p| {
            linalg::axpy(p.duration as f64, &p.constraint_values, &mut acc);
            acc.clone()
        })
        .collect()
}

pub fn constraint_violation(trace: &RunTrace) -> ViolationReport {
    let accumulated = cumulative_violation(trace).pop().unwrap_or_default();
    let certificate = match (&trace.final_queue, trace.gamma) {
        (Some(q), Some(g)) => Some(linalg::norm(q) / g),
        _ => None,
    };
    ViolationReport {
        accumulated,
        certificate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationMeasures {
    /// `Π_{x°} = Σ_i ‖x_i° − x_{i+1}°‖`, last point duplicated.
    pub path_length: f64,
    /// `Π_T = Σ_i (T_i − T_{i+1})²`, last duration paired with itself.
    pub duration_variation: f64,
    /// `Π_∇ = Σ_i ‖(T_i/S_i) Σ_s ∇f_s(x_i°)‖²`.
    pub gradient_energy: f64,
}

/// `Π_T` of a schedule.
pub fn duration_variation(schedule: &PeriodSchedule) -> f64 {
    (0..schedule.num_periods())
        .map(|i| {
            let d = schedule.duration(i) as f64 - schedule.next_duration(i) as f64;
            d * d
        })
        .sum()
}

/// Variation measures of a benchmark sequence; starved periods contribute
/// no gradient term.
pub fn variation_measures<P: Problem>(
    problem: &P,
    schedule: &PeriodSchedule,
    benchmark: &[Vec<f64>],
) -> Result<VariationMeasures, MetricsError> {
    let n = schedule.num_periods();
    if benchmark.len() != n {
        return Err(MetricsError::LengthMismatch {
            expected: n,
            got: benchmark.len(),
        });
    }
    let path_length = benchmark.windows(2).map(|w| linalg::dist(&w[0], &w[1])).sum();
    let duration_variation = duration_variation(schedule);
    let gradient_energy = (0..n)
        .filter_map(|i| {
            let slots = schedule.delivered_slots(i);
            aggregated_gradient_at(problem, &slots, schedule.duration(i), &benchmark[i])
                .ok()
                .map(|g| linalg::norm_sq(&g))
        })
        .sum();
    Ok(VariationMeasures {
        path_length,
        duration_variation,
        gradient_energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppMetrics {
    /// Time-averaged normalized precoding deviation.
    pub deviation: f64,
    /// Time-averaged transmit power.
    pub power: f64,
    /// Time-averaged per-user rate.
    pub rate: f64,
    /// Slots left out of the deviation average because the demand was zero.
    pub excluded: usize,
}

fn app_average(samples: &[AppSample]) -> AppMetrics {
    let t = samples.len() as f64;
    let mut dev = 0.0;
    let mut excluded = 0;
    let mut power = 0.0;
    let mut rate = 0.0;
    let mut users = 0usize;
    for s in samples {
        match s.normalized_deviation {
            Some(d) => dev += d,
            None => excluded += 1,
        }
        power += s.power;
        rate += s.rates.iter().sum::<f64>();
        users = users.max(s.rates.len());
    }
    AppMetrics {
        deviation: dev / t,
        power: power / t,
        rate: if users == 0 { 0.0 } else { rate / (t * users as f64) },
        excluded,
    }
}

/// `(f̄(T), P̄(T), R̄(T))` over the whole trace.
pub fn application_metrics(trace: &RunTrace) -> Result<AppMetrics, MetricsError> {
    if trace.samples.is_empty() {
        return Err(MetricsError::NoSamples);
    }
    let m = app_average(&trace.samples);
    if m.excluded > 0 {
        log::warn!(
            "{}: {} slots with zero demand excluded from f̄",
            trace.policy,
            m.excluded
        );
    }
    Ok(m)
}

/// Running application averages at the end of each period.
pub fn cumulative_application_metrics(trace: &RunTrace) -> Vec<Option<AppMetrics>> {
    if trace.samples.is_empty() {
        return vec![None; trace.periods.len()];
    }
    let mut end = 0;
    trace
        .periods
        .iter()
        .map(|p| {
            end += p.duration;
            Some(app_average(&trace.samples[..end.min(trace.samples.len())]))
        })
        .collect()
}
