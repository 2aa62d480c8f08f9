//! Experiment configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! seed = 7
//! horizon = 400
//! out = "out/default"
//! policies = ["pqga", "superslot", "per_period", "delayed", "offline"]
//!
//! [problem]
//! kind = "mimo"            # or "synthetic"
//! scaling = "mean_gain"    # channel units, MIMO only
//!
//! [problem.mimo]           # cell parameters, all optional
//! antennas = 32
//!
//! [schedule]
//! durations = [8, 4]       # repeated until the horizon is covered
//! offsets = [[0, 4], [0]]  # feedback slots within each period of the pattern
//! delay = 0
//!
//! [algorithm]
//! corollary = 4
//! target = "static"
//! steps = 8
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::bounds::{Exponents, RegretTarget};
use crate::mimo::problem::ChannelScaling;
use crate::mimo::CellConfig;
use crate::pqga::PqgaParams;
use crate::schedule::{DelayModel, FeedbackPattern, PeriodSchedule, ScheduleError};
use crate::synthetic::SyntheticConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Pqga,
    Superslot,
    PerPeriod,
    Delayed,
    Offline,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Pqga,
        PolicyKind::Superslot,
        PolicyKind::PerPeriod,
        PolicyKind::Delayed,
        PolicyKind::Offline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Pqga => "pqga",
            PolicyKind::Superslot => "superslot",
            PolicyKind::PerPeriod => "per_period",
            PolicyKind::Delayed => "delayed",
            PolicyKind::Offline => "offline",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Mimo,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub mimo: CellConfig,
    pub synthetic: SyntheticConfig,
    pub scaling: ChannelScaling,
    /// Channel norm bound `B`; the largest simulated `‖H_t‖_F` when absent.
    pub channel_bound: Option<f64>,
    /// Makes every synthetic constraint inactive over the base set.
    pub loose_constraints: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub durations: Vec<usize>,
    /// Feedback offsets for each entry of `durations`.
    pub offsets: Option<Vec<Vec<usize>>>,
    pub delay: i64,
    /// Per-feedback delays, shaped like `offsets`.
    pub delays: Option<Vec<Vec<i64>>>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            durations: vec![8],
            offsets: None,
            delay: 0,
            delays: None,
        }
    }
}

impl ScheduleConfig {
    /// Timeline over `horizon` slots. Offsets that fall outside a shortened
    /// final period are dropped together with their delays.
    pub fn build(&self, horizon: usize) -> Result<PeriodSchedule, ScheduleError> {
        let durations = PeriodSchedule::repeat_durations(&self.durations, horizon);
        let k = self.durations.len().max(1);
        let mut offsets = Vec::with_capacity(durations.len());
        let mut delays = Vec::with_capacity(durations.len());
        for (i, &d) in durations.iter().enumerate() {
            let slot_offsets = match &self.offsets {
                Some(o) => o[i % k].clone(),
                None => vec![0],
            };
            let slot_delays = match &self.delays {
                Some(dl) => dl[i % k].clone(),
                None => vec![self.delay; slot_offsets.len()],
            };
            let (o, dl): (Vec<usize>, Vec<i64>) = slot_offsets
                .into_iter()
                .zip(slot_delays)
                .filter(|(o, _)| *o < d || d == self.durations[i % k])
                .unzip();
            offsets.push(o);
            delays.push(dl);
        }
        PeriodSchedule::new(
            &durations,
            &FeedbackPattern::Explicit(offsets),
            &DelayModel::Explicit(delays),
        )
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.durations.is_empty() || self.durations.contains(&0) {
            return Err(invalid(
                "schedule.durations",
                "must be a nonempty list of positive lengths",
            ));
        }
        if let Some(o) = &self.offsets {
            if o.len() != self.durations.len() {
                return Err(invalid(
                    "schedule.offsets",
                    format!("{} entries for {} durations", o.len(), self.durations.len()),
                ));
            }
        }
        if let Some(d) = &self.delays {
            let shape: Vec<usize> = match &self.offsets {
                Some(o) => o.iter().map(Vec::len).collect(),
                None => vec![1; self.durations.len()],
            };
            if d.iter().map(Vec::len).collect::<Vec<_>>() != shape {
                return Err(invalid("schedule.delays", "must have the same shape as the offsets"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmConfig {
    /// Parameter prescription `1..=6`; exclusive with manual `alpha`, `eta`, `gamma`.
    pub corollary: Option<u8>,
    pub target: RegretTarget,
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    /// Descent steps per period; prescriptions 3 and 6 pick the smallest
    /// contracting value when absent.
    pub steps: Option<usize>,
    pub inner_tolerance: f64,
    pub inner_max_iters: usize,
    pub oracle_tolerance: f64,
    pub oracle_max_iters: usize,
    /// `ξ` of the many-step dynamic bound; `L` when absent.
    pub xi: Option<f64>,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            corollary: None,
            target: RegretTarget::Static,
            nu: None,
            delta: None,
            kappa: None,
            alpha: None,
            eta: None,
            gamma: None,
            steps: None,
            inner_tolerance: 1e-8,
            inner_max_iters: 10_000,
            oracle_tolerance: 1e-8,
            oracle_max_iters: 200_000,
            xi: None,
        }
    }
}

pub const DEFAULT_STEPS: usize = 8;
pub const DEFAULT_COROLLARY: u8 = 4;

/// How the step sizes are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSource {
    Manual(PqgaParams),
    Corollary {
        corollary: u8,
        exponents: Exponents,
        target: RegretTarget,
        steps: Option<usize>,
    },
}

impl AlgorithmConfig {
    pub fn exponents(&self) -> Exponents {
        Exponents {
            nu: self.nu,
            delta: self.delta,
            kappa: self.kappa,
        }
    }

    pub fn source(&self) -> Result<ParamSource, ConfigError> {
        let manual = [self.alpha, self.eta, self.gamma];
        let given = manual.iter().filter(|v| v.is_some()).count();
        match (self.corollary, given) {
            (Some(_), n) if n > 0 => Err(invalid(
                "algorithm",
                "set either corollary or alpha/eta/gamma, not both",
            )),
            (None, 3) => {
                let p = PqgaParams::new(
                    self.alpha.unwrap_or_default(),
                    self.eta.unwrap_or_default(),
                    self.gamma.unwrap_or_default(),
                    self.steps.unwrap_or(DEFAULT_STEPS),
                )
                .map_err(|e| invalid("algorithm", e.to_string()))?
                .with_inner(self.inner_tolerance, self.inner_max_iters);
                p.validate().map_err(|e| invalid("algorithm", e.to_string()))?;
                Ok(ParamSource::Manual(p))
            }
            (None, n) if n > 0 => Err(invalid("algorithm", "alpha, eta and gamma must be given together")),
            (c, _) => {
                let corollary = c.unwrap_or(DEFAULT_COROLLARY);
                let steps = match (corollary, self.steps) {
                    (3 | 6, s) => s,
                    (_, s) => Some(s.unwrap_or(DEFAULT_STEPS)),
                };
                Ok(ParamSource::Corollary {
                    corollary,
                    exponents: self.exponents(),
                    target: self.target,
                    steps,
                })
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(c) = self.corollary {
            if !(1..=6).contains(&c) {
                return Err(invalid("algorithm.corollary", format!("must be 1..=6, got {c}")));
            }
        }
        let corollary = match self.source()? {
            ParamSource::Manual(_) => None,
            ParamSource::Corollary { corollary, .. } => Some(corollary),
        };
        if let Some(nu) = self.nu {
            if !(0.0..1.0).contains(&nu) {
                return Err(invalid("algorithm.nu", format!("must lie in [0, 1), got {nu}")));
            }
        }
        if let Some(delta) = self.delta {
            if !(delta >= 0.0) {
                return Err(invalid("algorithm.delta", format!("must be nonnegative, got {delta}")));
            }
        }
        if let Some(kappa) = self.kappa {
            if !(0.0..=0.5).contains(&kappa) {
                return Err(invalid("algorithm.kappa", format!("must lie in [0, 1/2], got {kappa}")));
            }
        }
        match corollary {
            Some(1) if self.kappa.is_none() => return Err(invalid("algorithm.kappa", "required by corollary 1")),
            Some(1 | 4) if self.target == RegretTarget::Dynamic && self.nu.is_none() => {
                return Err(invalid("algorithm.nu", "required for the dynamic-regret prescription"))
            }
            _ => {}
        }
        if !(self.inner_tolerance > 0.0) || !(self.oracle_tolerance > 0.0) {
            return Err(invalid("algorithm", "tolerances must be positive"));
        }
        if self.inner_max_iters == 0 || self.oracle_max_iters == 0 {
            return Err(invalid("algorithm", "iteration limits must be positive"));
        }
        if let Some(xi) = self.xi {
            if !(xi > 0.0) {
                return Err(invalid("algorithm.xi", "must be positive"));
            }
        }
        Ok(())
    }
}

fn default_horizon() -> usize {
    400
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        if self.policies.is_empty() {
            return Err(invalid("policies", "select at least one policy"));
        }
        if self.policies.iter().collect::<BTreeSet<_>>().len() != self.policies.len() {
            return Err(invalid("policies", "duplicate entries"));
        }
        match self.problem.kind {
            ProblemKind::Mimo => self
                .problem
                .mimo
                .validate()
                .map_err(|e| invalid("problem.mimo", e.to_string()))?,
            ProblemKind::Synthetic => self
                .problem
                .synthetic
                .validate()
                .map_err(|e| invalid("problem.synthetic", e.to_string()))?,
        }
        if let Some(b) = self.problem.channel_bound {
            if !(b > 0.0) || !b.is_finite() {
                return Err(invalid("problem.channel_bound", format!("must be positive, got {b}")));
            }
        }
        self.schedule.validate()?;
        self.schedule
            .build(self.horizon)
            .map_err(|e| invalid("schedule", e.to_string()))?;
        self.algorithm.validate()
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
        path: "<document>".into(),
        message: e.to_string(),
    })?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: match e.path().to_string().as_str() {
            "." => "<root>".to_string(),
            p => p.to_string(),
        },
        message: e.inner().message().trim().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
