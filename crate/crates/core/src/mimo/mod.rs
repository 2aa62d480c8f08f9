//! Downlink massive-MIMO network virtualization.
//!
//! Service providers (SPs) each request a zero-forcing precoder for their own
//! users; the infrastructure provider picks one global precoder `V` whose
//! received signal `HV` should track the block-diagonal demand `D` under a
//! long-term average power budget and a short-term power limit.

pub mod channel;
pub mod demand;
pub mod oracle;
pub mod precoding;
pub mod problem;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

pub use channel::{channel_step, noise_power_dbm, pathloss_db, pathloss_shadowing, place_users, UserPosition};
pub use demand::{zf_demand, VirtualizationDemand};
pub use oracle::{per_period_mimo_oracle, MimoOracleSolution};
pub use precoding::{
    power_constraint_g, pqga_mimo_decision, pqga_mimo_inner_step, precoding_deviation, sinr_and_rate, Feedback,
};
pub use problem::{ChannelScaling, MimoProblem};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MimoError {
    #[error("SP {sp} has a rank-deficient channel block")]
    RankDeficient { sp: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("nonfinite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid cell configuration: {0}")]
    Config(String),
    #[error("user placement did not succeed within {0} draws")]
    Placement(usize),
    #[error("power bisection failed: {0}")]
    Bisection(String),
}

/// dBm to watts.
pub fn dbm_to_watt(p: f64) -> f64 {
    10f64.powf((p - 30.0) / 10.0)
}

/// Single-cell simulation parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    pub antennas: usize,
    pub providers: usize,
    pub users_per_provider: usize,
    pub p_max_dbm: f64,
    pub p_bar_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub channel_correlation: f64,
    pub shadowing_std_db: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            antennas: 32,
            providers: 4,
            users_per_provider: 2,
            p_max_dbm: 33.0,
            p_bar_dbm: 30.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 10.0,
            bandwidth_hz: 15e3,
            channel_correlation: 0.997,
            shadowing_std_db: 8.0,
            cell_radius_m: 500.0,
            min_distance_m: 10.0,
        }
    }
}

impl CellConfig {
    pub fn users(&self) -> usize {
        self.providers * self.users_per_provider
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watt(self.p_max_dbm)
    }

    pub fn p_bar(&self) -> f64 {
        dbm_to_watt(self.p_bar_dbm)
    }

    /// Noise power in watts.
    pub fn noise_power(&self) -> f64 {
        dbm_to_watt(noise_power_dbm(
            self.noise_density_dbm_hz,
            self.bandwidth_hz,
            self.noise_figure_db,
        ))
    }

    pub fn validate(&self) -> Result<(), MimoError> {
        let bad = |m: String| Err(MimoError::Config(m));
        if self.antennas == 0 || self.providers == 0 || self.users_per_provider == 0 {
            return bad("antenna, provider and user counts must be positive".into());
        }
        if self.users_per_provider > self.antennas {
            return bad(format!(
                "{} users per provider exceed {} antennas",
                self.users_per_provider, self.antennas
            ));
        }
        if self.p_bar() > self.p_max() {
            return bad(format!(
                "P̄ = {} dBm exceeds P_max = {} dBm",
                self.p_bar_dbm, self.p_max_dbm
            ));
        }
        if !(0.0..=1.0).contains(&self.channel_correlation) {
            return bad(format!(
                "channel correlation {} outside [0, 1]",
                self.channel_correlation
            ));
        }
        if !(self.bandwidth_hz > 0.0) || !(self.shadowing_std_db >= 0.0) {
            return bad("bandwidth must be positive and shadowing std nonnegative".into());
        }
        if !(self.min_distance_m > 0.0 && self.min_distance_m < self.cell_radius_m) {
            return bad("need 0 < min_distance < cell_radius".into());
        }
        Ok(())
    }
}

/// Interleaves a complex matrix (column-major) into a real vector.
pub fn to_real(m: &CMatrix) -> Vec<f64> {
    m.as_slice().iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`to_real`].
pub fn from_real(x: &[f64], rows: usize, cols: usize) -> CMatrix {
    debug_assert_eq!(x.len(), 2 * rows * cols);
    CMatrix::from_iterator(rows, cols, x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])))
}

/// `‖M‖_F²`.
pub fn fro_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}
