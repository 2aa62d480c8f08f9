//! The precoding application as an online constrained problem.

use num_complex::Complex64;
use serde::Deserialize;

use super::channel::{channel_init, channel_step, pathloss_shadowing, place_users, UserPosition};
use super::demand::zf_demand;
use super::oracle::per_period_mimo_oracle;
use super::precoding::{
    half_gradient, pqga_mimo_decision, pqga_mimo_inner_step, precoding_deviation, project_power, sinr_and_rate,
    DecisionWeights, Feedback,
};
use super::{fro_sq, from_real, to_real, CMatrix, CellConfig, MimoError};
use crate::bounds::mimo_constants;
use crate::error::SolverError;
use crate::linalg;
use crate::oracles::OracleSolution;
use crate::problem::{AppSample, Problem, ProblemConstants, Subproblem};
use crate::rng::{stream, Stream};

/// Unit in which channels enter the optimization. Rates are unaffected:
/// the noise power is rescaled along with the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelScaling {
    /// Channels as simulated, including path loss.
    Physical,
    /// Channels divided by the noise amplitude `σ_n`.
    Noise,
    /// Channels divided by `√(mean_k β_k)`.
    #[default]
    MeanGain,
}

#[derive(Debug, Clone)]
pub struct MimoProblem {
    antennas: usize,
    users: usize,
    users_per_provider: usize,
    p_max: f64,
    p_bar: f64,
    noise: f64,
    scale: f64,
    channels: Vec<CMatrix>,
    demands: Vec<CMatrix>,
    demand_norms: Vec<f64>,
    gains: Vec<f64>,
    positions: Vec<UserPosition>,
    channel_bound: f64,
}

impl MimoProblem {
    /// Simulates `horizon` slots of the cell with labeled random streams
    /// derived from `seed`.
    pub fn simulate(cell: &CellConfig, horizon: usize, seed: u64, scaling: ChannelScaling) -> Result<Self, MimoError> {
        cell.validate()?;
        let positions = place_users(cell, &mut stream(seed, Stream::Placement))?;
        let mut shadow = stream(seed, Stream::Shadowing);
        let gains = positions
            .iter()
            .map(|u| pathloss_shadowing(u.distance, &mut shadow, cell.shadowing_std_db))
            .collect::<Result<Vec<_>, _>>()?;
        let noise_phys = cell.noise_power();
        let scale = match scaling {
            ChannelScaling::Physical => 1.0,
            ChannelScaling::Noise => noise_phys.sqrt(),
            ChannelScaling::MeanGain => (gains.iter().sum::<f64>() / gains.len() as f64).sqrt(),
        };
        let mut rng = stream(seed, Stream::Channel);
        let (n, k) = (cell.antennas, cell.users());
        let mut rows: Vec<Vec<Complex64>> = gains.iter().map(|&b| channel_init(n, b, &mut rng)).collect();
        let mut channels = Vec::with_capacity(horizon);
        for t in 0..horizon {
            if t > 0 {
                for (row, &b) in rows.iter_mut().zip(&gains) {
                    *row = channel_step(row, b, cell.channel_correlation, &mut rng);
                }
            }
            channels.push(CMatrix::from_fn(k, n, |i, j| rows[i][j] / scale));
        }
        let mut p = Self::from_channels(
            channels,
            cell.users_per_provider,
            cell.p_max(),
            cell.p_bar(),
            noise_phys / (scale * scale),
        )?;
        p.gains = gains;
        p.positions = positions;
        p.scale = scale;
        Ok(p)
    }

    /// Builds the problem from given channels; demands are the per-slot ZF
    /// designs.
    pub fn from_channels(
        channels: Vec<CMatrix>,
        users_per_provider: usize,
        p_max: f64,
        p_bar: f64,
        noise: f64,
    ) -> Result<Self, MimoError> {
        let first = channels
            .first()
            .ok_or_else(|| MimoError::Config("empty horizon".into()))?;
        let (users, antennas) = (first.nrows(), first.ncols());
        if !(p_bar > 0.0 && p_bar <= p_max) {
            return Err(MimoError::Config(format!("need 0 < P̄ ≤ P_max, got {p_bar}, {p_max}")));
        }
        let mut demands = Vec::with_capacity(channels.len());
        for h in &channels {
            if h.nrows() != users || h.ncols() != antennas {
                return Err(MimoError::Shape("channel shapes differ across slots".into()));
            }
            if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(MimoError::NonFinite("channel"));
            }
            demands.push(zf_demand(h, users_per_provider, p_max)?.demand);
        }
        let demand_norms = demands.iter().map(fro_sq).collect();
        let channel_bound = channels.iter().map(|h| fro_sq(h).sqrt()).fold(0.0, f64::max);
        Ok(Self {
            antennas,
            users,
            users_per_provider,
            p_max,
            p_bar,
            noise,
            scale: 1.0,
            channels,
            demands,
            demand_norms,
            gains: Vec::new(),
            positions: Vec::new(),
            channel_bound,
        })
    }

    /// Overrides the channel norm bound `B` (default: empirical maximum).
    pub fn with_channel_bound(mut self, b: f64) -> Self {
        self.channel_bound = b;
        self
    }

    pub fn channel_bound(&self) -> f64 {
        self.channel_bound
    }

    pub fn channel(&self, t: usize) -> &CMatrix {
        &self.channels[t]
    }

    pub fn demand(&self, t: usize) -> &CMatrix {
        &self.demands[t]
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn users_per_provider(&self) -> usize {
        self.users_per_provider
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }

    /// Noise power in the scaled channel units.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Amplitude the simulated channels were divided by.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn large_scale_gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn positions(&self) -> &[UserPosition] {
        &self.positions
    }

    pub fn to_matrix(&self, x: &[f64]) -> CMatrix {
        from_real(x, self.antennas, self.users)
    }

    fn feedbacks(&self, slots: &[usize]) -> Vec<Feedback<'_>> {
        slots
            .iter()
            .map(|&s| Feedback {
                channel: &self.channels[s],
                demand: &self.demands[s],
            })
            .collect()
    }
}

impl Problem for MimoProblem {
    fn dim(&self) -> usize {
        2 * self.antennas * self.users
    }

    fn constraint_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.channels.len()
    }

    fn loss(&self, slot: usize, x: &[f64]) -> f64 {
        precoding_deviation(&self.channels[slot], &self.to_matrix(x), &self.demands[slot]).unwrap_or(f64::NAN)
    }

    fn loss_gradient(&self, slot: usize, x: &[f64]) -> Vec<f64> {
        let g = half_gradient(&self.channels[slot], &self.to_matrix(x), &self.demands[slot]);
        linalg::scale(2.0, &to_real(&g))
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        vec![linalg::norm_sq(x) - self.p_bar]
    }

    fn constraint_gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![linalg::scale(2.0, x)]
    }

    fn constraint_curvature(&self) -> f64 {
        2.0
    }

    fn project_base(&self, x: &[f64]) -> Vec<f64> {
        to_real(&project_power(self.to_matrix(x), self.p_max))
    }

    fn project_feasible(&self, x: &[f64]) -> Vec<f64> {
        to_real(&project_power(self.to_matrix(x), self.p_bar))
    }

    fn constants(&self) -> ProblemConstants {
        mimo_constants(self.p_max, self.p_bar, self.channel_bound).unwrap_or(ProblemConstants {
            gradient_bound: f64::NAN,
            smoothness: f64::NAN,
            strong_convexity: f64::NAN,
            constraint_lipschitz: f64::NAN,
            constraint_bound: f64::NAN,
            slater_margin: f64::NAN,
            diameter: f64::NAN,
        })
    }

    fn descent_step(
        &self,
        current: &[f64],
        slots: &[usize],
        duration: usize,
        alpha: f64,
    ) -> Option<Result<Vec<f64>, SolverError>> {
        let v = self.to_matrix(current);
        Some(
            pqga_mimo_inner_step(&v, &self.feedbacks(slots), duration, alpha, self.p_max)
                .map(|m| to_real(&m))
                .map_err(SolverError::from),
        )
    }

    fn solve_subproblem(&self, sub: &Subproblem<'_>) -> Option<Result<Vec<f64>, SolverError>> {
        let weights = DecisionWeights {
            alpha: sub.alpha,
            eta: sub.eta,
            penalty: sub.penalty_weights()[0],
        };
        Some(
            pqga_mimo_decision(
                &self.to_matrix(sub.anchor),
                &self.to_matrix(sub.previous),
                &self.feedbacks(sub.slots),
                sub.duration,
                weights,
                self.p_max,
            )
            .map(|m| to_real(&m))
            .map_err(SolverError::from),
        )
    }

    fn minimize_weighted_loss(
        &self,
        terms: &[(usize, f64)],
        _tolerance: f64,
    ) -> Option<Result<OracleSolution, SolverError>> {
        let t: Vec<(&CMatrix, &CMatrix, f64)> = terms
            .iter()
            .map(|&(s, w)| (&self.channels[s], &self.demands[s], w))
            .collect();
        Some(
            per_period_mimo_oracle(&t, self.p_bar)
                .map(|sol| OracleSolution {
                    point: to_real(&sol.precoder),
                    objective: sol.objective,
                    solver_residual: sol.power_error,
                    iterations: sol.bisections,
                })
                .map_err(SolverError::from),
        )
    }

    fn app_sample(&self, slot: usize, x: &[f64]) -> Option<AppSample> {
        let v = self.to_matrix(x);
        let dn = self.demand_norms[slot];
        let f = precoding_deviation(&self.channels[slot], &v, &self.demands[slot]).ok()?;
        Some(AppSample {
            normalized_deviation: (dn > 0.0).then(|| f / dn),
            power: fro_sq(&v),
            rates: sinr_and_rate(&self.channels[slot], &v, self.noise),
        })
    }
}
