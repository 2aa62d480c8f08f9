//! Closed-form regret and violation bounds, and the parameter prescriptions
//! that make them sublinear.

use serde::Deserialize;
use thiserror::Error;

use crate::metrics::VariationMeasures;
use crate::pqga::PqgaParams;
use crate::problem::ProblemConstants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("corollary {corollary} needs exponent {name}")]
    MissingExponent { corollary: u8, name: &'static str },
    #[error("no finite J: contraction factor {0} is not below 1")]
    NoFiniteSteps(f64),
}

/// Problem constants together with the longest update period `T_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConstants {
    pub problem: ProblemConstants,
    pub t_max: usize,
}

impl AssumptionConstants {
    pub fn new(problem: ProblemConstants, t_max: usize) -> Result<Self, BoundError> {
        let c = &problem;
        let named = [
            ("gradient bound", c.gradient_bound),
            ("smoothness", c.smoothness),
            ("strong convexity", c.strong_convexity),
            ("constraint Lipschitz constant", c.constraint_lipschitz),
            ("constraint bound", c.constraint_bound),
            ("Slater margin", c.slater_margin),
            ("diameter", c.diameter),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BoundError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if c.strong_convexity > c.smoothness {
            return Err(BoundError::InvalidInput(format!(
                "strong convexity {} exceeds smoothness {}",
                c.strong_convexity, c.smoothness
            )));
        }
        if t_max == 0 {
            return Err(BoundError::InvalidInput("T_max must be at least 1".into()));
        }
        Ok(Self { problem, t_max })
    }

    fn tm(&self) -> f64 {
        self.t_max as f64
    }

    /// `β²γ²T_max²`, the smallest admissible `η`.
    pub fn eta_floor(&self, gamma: f64) -> f64 {
        let b = self.problem.constraint_lipschitz;
        b * b * gamma * gamma * self.tm() * self.tm()
    }

    /// `T_max·L`, the smallest admissible `α`.
    pub fn alpha_floor(&self) -> f64 {
        self.tm() * self.problem.smoothness
    }
}

/// `ρ = (α − ϱ)/(α + ϱ)`.
pub fn rho(c: &AssumptionConstants, p: &PqgaParams) -> f64 {
    p.rho(c.problem.strong_convexity)
}

/// `ρᴶ` with `0⁰ = 1`.
pub fn rho_pow(rho: f64, steps: usize) -> f64 {
    if steps == 0 {
        1.0
    } else if rho <= 0.0 {
        0.0
    } else {
        rho.powf(steps as f64)
    }
}

fn at_least(value: f64, floor: f64) -> bool {
    value >= floor * (1.0 - 1e-12)
}

fn check_common(c: &AssumptionConstants, p: &PqgaParams) -> Result<(), BoundError> {
    if !(p.alpha > 0.0 && p.eta > 0.0 && p.gamma > 0.0) {
        return Err(BoundError::InvalidInput("α, η, γ must be positive".into()));
    }
    if !at_least(p.alpha, c.alpha_floor()) {
        return Err(BoundError::Hypothesis(format!(
            "α ≥ T_max·L fails: {} < {}",
            p.alpha,
            c.alpha_floor()
        )));
    }
    Ok(())
}

/// Checks `α ≥ T_max·L`, `η ≥ β²γ²T_max²`.
pub fn check_regret_hypotheses(c: &AssumptionConstants, p: &PqgaParams) -> Result<(), BoundError> {
    check_common(c, p)?;
    if !at_least(p.eta, c.eta_floor(p.gamma)) {
        return Err(BoundError::Hypothesis(format!(
            "η ≥ β²γ²T_max² fails: {} < {}",
            p.eta,
            c.eta_floor(p.gamma)
        )));
    }
    Ok(())
}

fn queue_term(c: &AssumptionConstants, gamma: f64, duration_variation: f64) -> f64 {
    let g = c.problem.constraint_bound;
    gamma * gamma * g * g * (c.tm() * c.tm() + duration_variation)
}

/// Dynamic regret bound for any `J`:
/// `(D²T_max/4α)T + (αρᴶ + η)(R² + 2RΠ_x°) + γ²G²(T_max² + Π_T)`.
pub fn dynamic_regret_bound(
    c: &AssumptionConstants,
    p: &PqgaParams,
    path_length: f64,
    duration_variation: f64,
    horizon: usize,
) -> Result<f64, BoundError> {
    check_regret_hypotheses(c, p)?;
    let k = &c.problem;
    let d = k.gradient_bound;
    let r = k.diameter;
    let first = d * d * c.tm() / (4.0 * p.alpha) * horizon as f64;
    let second = (p.alpha * rho_pow(rho(c, p), p.steps) + p.eta) * (r * r + 2.0 * r * path_length);
    Ok(first + second + queue_term(c, p.gamma, duration_variation))
}

/// Dynamic regret bound once `2ρ^{J+1} < 1`:
/// `Π_∇/(4ξ) + (L+ξ)/(1−2ρ^{J+1}) · (R² + [γ²G²(T_max²+Π_T) + ηR(R+2Π_x°)]/(α+ϱ))`.
pub fn dynamic_regret_bound_large_steps(
    c: &AssumptionConstants,
    p: &PqgaParams,
    path_length: f64,
    duration_variation: f64,
    gradient_energy: f64,
    xi: f64,
) -> Result<f64, BoundError> {
    check_common(c, p)?;
    if !(xi > 0.0) {
        return Err(BoundError::InvalidInput(format!("ξ must be positive, got {xi}")));
    }
    let eta_floor = (4.0 * p.alpha).max(c.eta_floor(p.gamma));
    if !at_least(p.eta, eta_floor) {
        return Err(BoundError::Hypothesis(format!(
            "η ≥ max{{4α, β²γ²T_max²}} fails: {} < {}",
            p.eta, eta_floor
        )));
    }
    let contraction = 2.0 * rho_pow(rho(c, p), p.steps + 1);
    if contraction >= 1.0 {
        return Err(BoundError::Hypothesis(format!("2ρ^(J+1) < 1 fails: {contraction}")));
    }
    let k = &c.problem;
    let r = k.diameter;
    let inner = queue_term(c, p.gamma, duration_variation) + p.eta * r * (r + 2.0 * path_length);
    Ok(gradient_energy / (4.0 * xi)
        + (k.smoothness + xi) / (1.0 - contraction) * (r * r + inner / (p.alpha + k.strong_convexity)))
}

/// Static regret bound: `(D²T_max/4α)T + (αρᴶ + η)R² + γ²G²(T_max² + Π_T)`.
pub fn static_regret_bound(
    c: &AssumptionConstants,
    p: &PqgaParams,
    duration_variation: f64,
    horizon: usize,
) -> Result<f64, BoundError> {
    dynamic_regret_bound(c, p, 0.0, duration_variation, horizon)
}

/// Violation bound: `2GT_max + [(α+η)R² + DRT_max² + 2γ²G²T_max]/(εγ²)`.
pub fn violation_bound(c: &AssumptionConstants, p: &PqgaParams) -> Result<f64, BoundError> {
    if !(p.alpha > 0.0 && p.eta > 0.0 && p.gamma > 0.0) {
        return Err(BoundError::InvalidInput("α, η, γ must be positive".into()));
    }
    let k = &c.problem;
    let (g, r, d, tm) = (k.constraint_bound, k.diameter, k.gradient_bound, c.tm());
    let g2 = p.gamma * p.gamma;
    Ok(2.0 * g * tm + ((p.alpha + p.eta) * r * r + d * r * tm * tm + 2.0 * g2 * g * g * tm) / (k.slater_margin * g2))
}

/// Smallest `J ≥ 0` with `2ρ^{J+1} < 1`.
pub fn min_steps_for_contraction(rho: f64) -> Result<usize, BoundError> {
    if !(rho < 1.0) || rho.is_nan() {
        return Err(BoundError::NoFiniteSteps(rho));
    }
    if rho < 0.0 {
        return Err(BoundError::InvalidInput(format!("ρ must be nonnegative, got {rho}")));
    }
    let mut j = if rho > 0.0 {
        ((0.5f64.ln() / rho.ln()).ceil() as usize).saturating_sub(2)
    } else {
        0
    };
    while 2.0 * rho_pow(rho, j + 1) >= 1.0 {
        j += 1;
    }
    while j > 0 && 2.0 * rho_pow(rho, j) < 1.0 {
        j -= 1;
    }
    Ok(j)
}

/// Which regret the `α` prescription of corollaries 1 and 4 targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretTarget {
    #[default]
    Dynamic,
    Static,
}

/// Growth exponents: `Π_x° = O(T^ν)`, `Π_T = O(T^δ)`, `γ² = T^κ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Exponents {
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
}

/// Parameters prescribed by corollary `corollary ∈ 1..=6` for horizon `T`.
///
/// `steps` is the number of descent steps; for corollaries 3 and 6 `None`
/// picks the smallest `J` with `2ρ^{J+1} < 1` and an explicit value is
/// checked against that condition.
pub fn select_params(
    c: &AssumptionConstants,
    corollary: u8,
    horizon: usize,
    exps: &Exponents,
    target: RegretTarget,
    steps: Option<usize>,
) -> Result<PqgaParams, BoundError> {
    if horizon == 0 {
        return Err(BoundError::InvalidInput("horizon must be positive".into()));
    }
    let t = horizon as f64;
    let base = c.alpha_floor();
    let alpha_for = |nu_needed: bool| -> Result<f64, BoundError> {
        match target {
            RegretTarget::Static => Ok(base * t.sqrt()),
            RegretTarget::Dynamic if nu_needed => {
                let nu = exps.nu.ok_or(BoundError::MissingExponent { corollary, name: "nu" })?;
                if !(0.0..1.0).contains(&nu) {
                    return Err(BoundError::InvalidInput(format!("ν must lie in [0, 1), got {nu}")));
                }
                Ok(base * t.powf((1.0 - nu) / 2.0))
            }
            RegretTarget::Dynamic => Ok(base * t.sqrt()),
        }
    };
    let (alpha, gamma, eta, j) = match corollary {
        1 => {
            let kappa = exps.kappa.ok_or(BoundError::MissingExponent {
                corollary,
                name: "kappa",
            })?;
            if !(0.0..=0.5).contains(&kappa) {
                return Err(BoundError::InvalidInput(format!("κ must lie in [0, 1/2], got {kappa}")));
            }
            let gamma = t.powf(kappa).sqrt();
            (alpha_for(true)?, gamma, c.eta_floor(gamma), steps.unwrap_or(0))
        }
        2 => (base * t.sqrt(), 1.0, c.eta_floor(1.0), steps.unwrap_or(0)),
        3 | 6 => {
            let alpha = base;
            let eta = (4.0 * alpha).max(c.eta_floor(1.0));
            let r = (alpha - c.problem.strong_convexity) / (alpha + c.problem.strong_convexity);
            let min_j = min_steps_for_contraction(r)?;
            let j = match steps {
                None => min_j,
                Some(j) if j >= min_j => j,
                Some(j) => {
                    return Err(BoundError::Hypothesis(format!(
                        "2ρ^(J+1) < 1 needs J ≥ {min_j}, got {j}"
                    )))
                }
            };
            (alpha, 1.0, eta, j)
        }
        4 => {
            let gamma = t.sqrt().sqrt();
            (alpha_for(true)?, gamma, c.eta_floor(gamma), steps.unwrap_or(0))
        }
        5 => {
            let gamma = t.sqrt().sqrt();
            (base * t.sqrt(), gamma, c.eta_floor(gamma), steps.unwrap_or(0))
        }
        other => return Err(BoundError::InvalidInput(format!("unknown corollary {other}"))),
    };
    PqgaParams::new(alpha, eta, gamma, j).map_err(|e| BoundError::InvalidInput(e.to_string()))
}

/// Assumption constants of the precoding application for total power limit
/// `P_max`, long-term budget `P̄` and channel norm bound `B`.
pub fn mimo_constants(p_max: f64, p_bar: f64, channel_bound: f64) -> Result<ProblemConstants, BoundError> {
    if !(p_bar > 0.0) || !(channel_bound > 0.0) {
        return Err(BoundError::InvalidInput("P̄ and B must be positive".into()));
    }
    if p_bar > p_max {
        return Err(BoundError::InvalidInput(format!("P̄ = {p_bar} exceeds P_max = {p_max}")));
    }
    let b2 = channel_bound * channel_bound;
    let sp = p_max.sqrt();
    Ok(ProblemConstants {
        gradient_bound: 4.0 * b2 * sp,
        smoothness: b2,
        strong_convexity: 2.0,
        constraint_lipschitz: 2.0 * sp,
        constraint_bound: (p_bar * p_bar).max((p_max - p_bar).powi(2)).sqrt(),
        slater_margin: p_bar,
        diameter: 2.0 * sp,
    })
}

/// All bounds for one run, each with its own hypothesis outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub dynamic: Result<f64, BoundError>,
    pub dynamic_large_steps: Result<f64, BoundError>,
    pub static_: Result<f64, BoundError>,
    pub violation: Result<f64, BoundError>,
    pub rho: f64,
    pub xi: f64,
    pub params: PqgaParams,
    pub variation: VariationMeasures,
    pub horizon: usize,
}

/// Evaluates every bound; `xi = None` uses `ξ = L`.
pub fn bound_report(
    c: &AssumptionConstants,
    p: &PqgaParams,
    variation: VariationMeasures,
    horizon: usize,
    xi: Option<f64>,
) -> BoundReport {
    let xi = xi.unwrap_or(c.problem.smoothness);
    BoundReport {
        dynamic: dynamic_regret_bound(c, p, variation.path_length, variation.duration_variation, horizon),
        dynamic_large_steps: dynamic_regret_bound_large_steps(
            c,
            p,
            variation.path_length,
            variation.duration_variation,
            variation.gradient_energy,
            xi,
        ),
        static_: static_regret_bound(c, p, variation.duration_variation, horizon),
        violation: violation_bound(c, p),
        rho: rho(c, p),
        xi,
        params: *p,
        variation,
        horizon,
    }
}

/// Least-squares slope of `ln value` against `ln T`; points with
/// nonpositive values are skipped.
pub fn growth_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, v)| *t > 0.0 && *v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
