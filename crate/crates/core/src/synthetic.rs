//! Randomly generated strongly convex test problem with known constants.
//!
//! Losses are separable quadratics `f_t(x) = Σ_j h_{t,j}(x_j − c_{t,j})²`
//! with curvatures `h ∈ [ϱ, L]`, the base set is a centered ball of radius
//! `r`, and the long-term constraints are affine, `g_c(x) = a_cᵀx − b_c`.
//! Targets `c_t` follow a random walk kept inside a ball of radius `r_c`.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::Deserialize;

use crate::error::SolverError;
use crate::linalg;
use crate::problem::{project_ball, project_ball_halfspaces, Problem, ProblemConstants};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub constraints: usize,
    pub radius: f64,
    pub target_radius: f64,
    /// Per-coordinate standard deviation of a target step.
    pub target_drift: f64,
    pub curvature_min: f64,
    pub curvature_max: f64,
    pub offset_min: f64,
    pub offset_max: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dim: 4,
            constraints: 2,
            radius: 2.0,
            target_radius: 1.5,
            target_drift: 0.05,
            curvature_min: 0.5,
            curvature_max: 1.0,
            offset_min: 0.2,
            offset_max: 0.6,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParameter(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.constraints == 0 {
            return bad("at least one constraint is required");
        }
        if !(self.radius > 0.0) || !(self.target_radius >= 0.0) || !(self.target_drift >= 0.0) {
            return bad("radii and drift must be nonnegative, radius positive");
        }
        if !(self.curvature_min > 0.0 && self.curvature_min <= self.curvature_max) {
            return bad("need 0 < curvature_min ≤ curvature_max");
        }
        if !(self.offset_min > 0.0 && self.offset_min <= self.offset_max) {
            return bad("need 0 < offset_min ≤ offset_max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    config: SyntheticConfig,
    curvatures: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    halfspaces: Vec<(Vec<f64>, f64)>,
}

impl SyntheticProblem {
    pub fn generate(config: &SyntheticConfig, horizon: usize, seed: u64) -> Result<Self, SolverError> {
        config.validate()?;
        let mut rng = stream(seed, Stream::Synthetic);
        let n = config.dim;
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let halfspaces = (0..config.constraints)
            .map(|_| {
                let a: Vec<f64> = (0..n).map(|_| std.sample(&mut rng)).collect();
                let b = rng.random_range(config.offset_min..=config.offset_max);
                (a, b)
            })
            .collect();
        let curv = Uniform::new_inclusive(config.curvature_min, config.curvature_max)
            .map_err(|e| SolverError::InvalidParameter(e.to_string()))?;
        let curvatures = (0..horizon)
            .map(|_| (0..n).map(|_| curv.sample(&mut rng)).collect())
            .collect();
        let mut targets = Vec::with_capacity(horizon);
        let r_c2 = config.target_radius * config.target_radius;
        let start_scale = config.target_radius / (n as f64).sqrt();
        let mut c: Vec<f64> = (0..n).map(|_| start_scale * std.sample(&mut rng)).collect();
        for _ in 0..horizon {
            if r_c2 > 0.0 {
                c = project_ball(&c, r_c2)?;
            } else {
                c.iter_mut().for_each(|v| *v = 0.0);
            }
            targets.push(c.clone());
            for v in c.iter_mut() {
                *v += config.target_drift * std.sample(&mut rng);
            }
        }
        Ok(Self {
            config: config.clone(),
            curvatures,
            targets,
            halfspaces,
        })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn halfspaces(&self) -> &[(Vec<f64>, f64)] {
        &self.halfspaces
    }

    /// Shifts every offset `b_c` up so that no constraint can bind anywhere
    /// in the base set.
    pub fn loosen_constraints(mut self) -> Self {
        let r = self.config.radius;
        for (a, b) in &mut self.halfspaces {
            *b += linalg::norm(a) * r;
        }
        self
    }

    fn radius_sq(&self) -> f64 {
        self.config.radius * self.config.radius
    }
}

impl Problem for SyntheticProblem {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn constraint_dim(&self) -> usize {
        self.halfspaces.len()
    }

    fn horizon(&self) -> usize {
        self.targets.len()
    }

    fn loss(&self, slot: usize, x: &[f64]) -> f64 {
        let h = &self.curvatures[slot];
        let c = &self.targets[slot];
        (0..x.len()).map(|j| h[j] * (x[j] - c[j]).powi(2)).sum()
    }

    fn loss_gradient(&self, slot: usize, x: &[f64]) -> Vec<f64> {
        let h = &self.curvatures[slot];
        let c = &self.targets[slot];
        (0..x.len()).map(|j| 2.0 * h[j] * (x[j] - c[j])).collect()
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.halfspaces.iter().map(|(a, b)| linalg::dot(a, x) - b).collect()
    }

    fn constraint_gradients(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        self.halfspaces.iter().map(|(a, _)| a.clone()).collect()
    }

    fn project_base(&self, x: &[f64]) -> Vec<f64> {
        project_ball(x, self.radius_sq()).unwrap_or_else(|_| vec![f64::NAN; x.len()])
    }

    fn project_feasible(&self, x: &[f64]) -> Vec<f64> {
        if !linalg::all_finite(x) {
            return vec![f64::NAN; x.len()];
        }
        project_ball_halfspaces(x, self.radius_sq(), &self.halfspaces, 1e-10, 10_000)
    }

    fn constants(&self) -> ProblemConstants {
        let cfg = &self.config;
        let r = cfg.radius;
        let g2: f64 = self
            .halfspaces
            .iter()
            .map(|(a, b)| (linalg::norm(a) * r + b).powi(2))
            .sum();
        let beta = self
            .halfspaces
            .iter()
            .map(|(a, _)| linalg::norm_sq(a))
            .sum::<f64>()
            .sqrt();
        ProblemConstants {
            gradient_bound: 2.0 * cfg.curvature_max * (r + cfg.target_radius),
            smoothness: cfg.curvature_max,
            strong_convexity: cfg.curvature_min,
            constraint_lipschitz: beta,
            constraint_bound: g2.sqrt(),
            slater_margin: self.halfspaces.iter().map(|h| h.1).fold(f64::INFINITY, f64::min),
            diameter: 2.0 * r,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem(seed: u64) -> SyntheticProblem {
        SyntheticProblem::generate(&SyntheticConfig::default(), 200, seed).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let a = problem(3);
        let b = problem(3);
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.halfspaces, b.halfspaces);
        assert_ne!(problem(4).targets, a.targets);
    }

    #[test]
    fn targets_stay_in_their_ball() {
        let p = problem(1);
        let r = p.config().target_radius;
        assert!(p.targets().iter().all(|c| linalg::norm(c) <= r * (1.0 + 1e-12)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = problem(2);
        let x = [0.3, -0.2, 0.1, 0.5];
        let g = p.loss_gradient(5, &x);
        for j in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += 1e-6;
            xm[j] -= 1e-6;
            let fd = (p.loss(5, &xp) - p.loss(5, &xm)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn constants_hold_on_random_points() {
        let p = problem(5);
        let k = p.constants();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = p.project_base(&x);
            let t = rng.random_range(0..200);
            assert!(linalg::norm(&p.loss_gradient(t, &x)) <= k.gradient_bound);
            assert!(linalg::norm(&p.constraints(&x)) <= k.constraint_bound);
            let y = p.project_base(&(0..4).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>());
            let dg = linalg::dist(&p.constraints(&x), &p.constraints(&y));
            assert!(dg <= k.constraint_lipschitz * linalg::dist(&x, &y) + 1e-12);
        }
        // the origin is strictly feasible by the Slater margin
        assert!(p.constraints(&[0.0; 4]).iter().all(|g| *g <= -k.slater_margin));
    }

    #[test]
    fn feasible_projection_is_feasible() {
        let p = problem(6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
            let y = p.project_feasible(&x);
            assert!(p.constraints(&y).iter().all(|g| *g <= 1e-9));
            assert!(linalg::norm_sq(&y) <= 4.0 + 1e-9);
        }
    }

    #[test]
    fn loosened_constraints_never_bind_in_the_ball() {
        let p = problem(7).loosen_constraints();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = p.project_base(&x);
            assert!(p.constraints(&x).iter().all(|g| *g < 0.0));
        }
    }
}
