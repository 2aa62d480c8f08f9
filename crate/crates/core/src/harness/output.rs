//! Per-period CSV traces, the per-policy summary and the metadata file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{ExperimentOutcome, PolicyRun};
use super::HarnessError;
use crate::bounds::BoundError;
use crate::metrics::{
    application_metrics, constraint_violation, cumulative_application_metrics, cumulative_regret, cumulative_violation,
};

/// Formats `v` with 12 significant digits, switching to exponent notation
/// outside `[1e-4, 1e12)`; trailing zeros are dropped.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// Column names for `constraints` long-term constraints.
pub fn csv_header(constraints: usize) -> Vec<String> {
    let mut h: Vec<String> = ["seed", "policy", "period", "t_start", "T_i", "S_i", "loss_weighted"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=constraints).map(|c| format!("g_{c}")));
    h.extend(
        ["queue_norm", "re_dyn_cum", "re_stat_cum"]
            .iter()
            .map(|s| s.to_string()),
    );
    h.extend((1..=constraints).map(|c| format!("vo_{c}_cum")));
    h.extend(
        ["app_fbar_cum", "app_pbar_cum", "app_rbar_cum"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// One row per period of `run`; inapplicable fields are left empty.
pub fn csv_rows(outcome: &ExperimentOutcome, run: &PolicyRun) -> Result<Vec<Vec<String>>, HarnessError> {
    let trace = &run.trace;
    let n = trace.periods.len();
    let re_dyn = cumulative_regret(trace, &outcome.dynamic_benchmark[..n]).map_err(HarnessError::metrics)?;
    let re_stat = cumulative_regret(trace, &outcome.static_benchmark[..n]).map_err(HarnessError::metrics)?;
    let vo = cumulative_violation(trace);
    let app = cumulative_application_metrics(trace);
    let seed = outcome.config.seed.to_string();
    Ok(trace
        .periods
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![
                seed.clone(),
                trace.policy.clone(),
                p.period.to_string(),
                p.start.to_string(),
                p.duration.to_string(),
                p.delivered.to_string(),
                opt(p.weighted_loss),
            ];
            row.extend(p.constraint_values.iter().map(|&g| format_number(g)));
            row.push(opt(p.queue_norm()));
            row.push(format_number(re_dyn[i]));
            row.push(format_number(re_stat[i]));
            row.extend(vo[i].iter().map(|&v| format_number(v)));
            let a = app[i];
            row.push(opt(a.map(|a| a.deviation)));
            row.push(opt(a.map(|a| a.power)));
            row.push(opt(a.map(|a| a.rate)));
            row
        })
        .collect())
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    w.write_record(header).map_err(|e| HarnessError::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| HarnessError::csv(path, e))?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.txt";

/// Files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub policies: Vec<PathBuf>,
    pub summary: PathBuf,
    pub metadata: PathBuf,
}

/// Writes `<policy>.csv` for every run, `summary.csv` and `metadata.txt`
/// into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<OutputFiles, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let c = outcome.instance.problem().constraint_dim();
    let header = csv_header(c);
    let mut policies = Vec::new();
    for run in &outcome.runs {
        let path = dir.join(format!("{}.csv", run.kind));
        write_csv(&path, &header, &csv_rows(outcome, run)?)?;
        policies.push(path);
    }
    let summary = dir.join(SUMMARY_FILE);
    let (sh, sr) = summary_table(outcome)?;
    write_csv(&summary, &sh, &sr)?;
    let metadata = dir.join(METADATA_FILE);
    fs::write(&metadata, metadata_text(outcome)).map_err(|source| HarnessError::Io {
        path: metadata.clone(),
        source,
    })?;
    Ok(OutputFiles {
        policies,
        summary,
        metadata,
    })
}

/// Final totals of every policy, one row each.
pub fn summary_table(outcome: &ExperimentOutcome) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let c = outcome.instance.problem().constraint_dim();
    let mut header: Vec<String> = [
        "seed",
        "policy",
        "status",
        "periods",
        "horizon",
        "loss_total",
        "re_dyn",
        "re_stat",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=c).map(|i| format!("vo_{i}")));
    header.extend(
        ["queue_certificate", "app_fbar", "app_pbar", "app_rbar"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut rows = Vec::new();
    for run in &outcome.runs {
        let t = &run.trace;
        let n = t.periods.len();
        let re_dyn = cumulative_regret(t, &outcome.dynamic_benchmark[..n]).map_err(HarnessError::metrics)?;
        let re_stat = cumulative_regret(t, &outcome.static_benchmark[..n]).map_err(HarnessError::metrics)?;
        let vo = constraint_violation(t);
        let app = application_metrics(t).ok();
        let mut row = vec![
            outcome.config.seed.to_string(),
            t.policy.clone(),
            match &run.failure {
                None => "ok".to_string(),
                Some(e) => format!("failed: {e}"),
            },
            n.to_string(),
            t.horizon().to_string(),
            format_number(t.periods.iter().filter_map(|p| p.weighted_loss).sum()),
            opt(re_dyn.last().copied()),
            opt(re_stat.last().copied()),
        ];
        row.extend((0..c).map(|i| opt(vo.accumulated.get(i).copied())));
        row.push(opt(vo.certificate));
        row.push(opt(app.map(|a| a.deviation)));
        row.push(opt(app.map(|a| a.power)));
        row.push(opt(app.map(|a| a.rate)));
        rows.push(row);
    }
    Ok((header, rows))
}

fn bound_line(out: &mut String, name: &str, b: &Result<f64, BoundError>) {
    let _ = match b {
        Ok(v) => writeln!(out, "bound.{name} = {}", format_number(*v)),
        Err(e) => writeln!(out, "bound.{name} = unavailable ({e})"),
    };
}

/// Plain `key = value` description of the run.
pub fn metadata_text(outcome: &ExperimentOutcome) -> String {
    let cfg = &outcome.config;
    let s = &outcome.schedule;
    let p = &outcome.params;
    let mut out = String::new();
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "problem = {:?}", cfg.problem.kind);
    let _ = writeln!(out, "horizon = {}", s.horizon());
    let _ = writeln!(out, "periods = {}", s.num_periods());
    let _ = writeln!(out, "max_duration = {}", s.max_duration());
    let _ = writeln!(out, "starved_periods = {:?}", s.starved_periods());
    let _ = writeln!(
        out,
        "policies = {}",
        cfg.policies.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(out, "initial_decision = zero");
    let _ = writeln!(out, "alpha = {}", format_number(p.alpha));
    let _ = writeln!(out, "eta = {}", format_number(p.eta));
    let _ = writeln!(out, "gamma = {}", format_number(p.gamma));
    let _ = writeln!(out, "steps = {}", p.steps);
    let _ = writeln!(out, "inner_tolerance = {}", format_number(p.inner_tolerance));
    let _ = writeln!(out, "inner_max_iters = {}", p.inner_max_iters);
    let _ = writeln!(
        out,
        "oracle_tolerance = {}",
        format_number(cfg.algorithm.oracle_tolerance)
    );
    let _ = writeln!(
        out,
        "superslot = alpha, eta and gamma shared with pqga; no descent steps; every period counted as one slot"
    );
    if let crate::harness::experiment::Instance::Mimo(m) = &outcome.instance {
        let _ = writeln!(out, "channel_scaling = {:?}", cfg.problem.scaling);
        let _ = writeln!(out, "channel_scale = {}", format_number(m.scale()));
        let _ = writeln!(out, "channel_bound = {}", format_number(m.channel_bound()));
        let _ = writeln!(out, "p_max = {}", format_number(m.p_max()));
        let _ = writeln!(out, "p_bar = {}", format_number(m.p_bar()));
        let _ = writeln!(out, "noise = {}", format_number(m.noise()));
    }
    match &outcome.constants {
        Ok(c) => {
            let k = &c.problem;
            for (name, v) in [
                ("gradient_bound", k.gradient_bound),
                ("smoothness", k.smoothness),
                ("strong_convexity", k.strong_convexity),
                ("constraint_lipschitz", k.constraint_lipschitz),
                ("constraint_bound", k.constraint_bound),
                ("slater_margin", k.slater_margin),
                ("diameter", k.diameter),
            ] {
                let _ = writeln!(out, "constant.{name} = {}", format_number(v));
            }
        }
        Err(e) => {
            let _ = writeln!(out, "constants = unavailable ({e})");
        }
    }
    let v = &outcome.variation;
    let _ = writeln!(out, "variation.path_length = {}", format_number(v.path_length));
    let _ = writeln!(out, "variation.duration = {}", format_number(v.duration_variation));
    let _ = writeln!(out, "variation.gradient_energy = {}", format_number(v.gradient_energy));
    if let Some(b) = &outcome.bounds {
        let _ = writeln!(out, "rho = {}", format_number(b.rho));
        let _ = writeln!(out, "xi = {}", format_number(b.xi));
        bound_line(&mut out, "dynamic_regret", &b.dynamic);
        bound_line(&mut out, "dynamic_regret_many_steps", &b.dynamic_large_steps);
        bound_line(&mut out, "static_regret", &b.static_);
        bound_line(&mut out, "violation", &b.violation);
    }
    let _ = writeln!(out, "offline.objective = {}", format_number(outcome.offline.objective));
    for run in &outcome.runs {
        if let Some(e) = &run.failure {
            let _ = writeln!(out, "failure.{} = {e}", run.kind);
        }
    }
    out
}
