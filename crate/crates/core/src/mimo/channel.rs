//! User placement, large-scale fading and Gauss-Markov small-scale fading.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{CellConfig, MimoError};

const MAX_PLACEMENT_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition {
    pub x: f64,
    pub y: f64,
    pub distance: f64,
}

/// Whether `(x, y)` lies in the hexagon of circumradius `r` centered at the
/// origin with vertices on the x axis.
pub fn in_hexagon(x: f64, y: f64, r: f64) -> bool {
    let apothem = r * 3f64.sqrt() / 2.0;
    [30f64, 90.0, 150.0].iter().all(|deg| {
        let phi = deg.to_radians();
        (x * phi.cos() + y * phi.sin()).abs() <= apothem
    })
}

/// Draws `K` users uniformly over the hexagonal cell, at least
/// `min_distance_m` from the base station.
pub fn place_users<R: Rng>(config: &CellConfig, rng: &mut R) -> Result<Vec<UserPosition>, MimoError> {
    let r = config.cell_radius_m;
    let mut users = Vec::with_capacity(config.users());
    let mut draws = 0;
    while users.len() < config.users() {
        if draws == MAX_PLACEMENT_DRAWS {
            return Err(MimoError::Placement(draws));
        }
        draws += 1;
        let rad = r * rng.random::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        let (x, y) = (rad * theta.cos(), rad * theta.sin());
        if rad >= config.min_distance_m && in_hexagon(x, y, r) {
            users.push(UserPosition { x, y, distance: rad });
        }
    }
    Ok(users)
}

/// Path loss in dB at distance `d` meters with shadowing `psi` dB.
pub fn pathloss_db(d: f64, psi: f64) -> f64 {
    -31.54 - 33.0 * d.log10() - psi
}

/// Linear large-scale gain with shadowing `ψ ~ N(0, σ_φ²)` in dB.
pub fn pathloss_shadowing<R: Rng>(d: f64, rng: &mut R, shadowing_std_db: f64) -> Result<f64, MimoError> {
    if !(d > 0.0) {
        return Err(MimoError::Config(format!("distance must be positive, got {d}")));
    }
    let psi = if shadowing_std_db > 0.0 {
        Normal::new(0.0, shadowing_std_db)
            .map_err(|e| MimoError::Config(e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    Ok(10f64.powf(pathloss_db(d, psi) / 10.0))
}

/// Noise power in dBm: density + bandwidth + noise figure, summed in dB.
pub fn noise_power_dbm(density_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    density_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

fn cn<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Stationary draw `h ~ CN(0, βI)`.
pub fn channel_init<R: Rng>(n: usize, gain: f64, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| cn(rng, gain)).collect()
}

/// `h_{t+1} = α_h h_t + z`, `z ~ CN(0, (1 − α_h²)βI)`.
pub fn channel_step<R: Rng>(h_prev: &[Complex64], gain: f64, correlation: f64, rng: &mut R) -> Vec<Complex64> {
    if correlation >= 1.0 {
        return h_prev.to_vec();
    }
    let var = (1.0 - correlation * correlation) * gain;
    h_prev.iter().map(|h| h * correlation + cn(rng, var)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn placement_respects_cell_and_is_deterministic() {
        let cfg = CellConfig::default();
        let a = place_users(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = place_users(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        for u in &a {
            assert!(u.distance >= 10.0 && u.distance <= 500.0);
            assert!(in_hexagon(u.x, u.y, 500.0));
        }
    }

    #[test]
    fn mean_distance_matches_monte_carlo_oracle() {
        // Oracle: uniform grid over the hexagon bounding box, keeping cells
        // inside the hexagon and beyond the minimum distance.
        let r: f64 = 500.0;
        let h = 1.0;
        let (mut sum, mut count) = (0.0, 0usize);
        let mut y = -r + h / 2.0;
        while y < r {
            let mut x = -r + h / 2.0;
            while x < r {
                let d = (x * x + y * y).sqrt();
                if d >= 10.0 && in_hexagon(x, y, r) {
                    sum += d;
                    count += 1;
                }
                x += h;
            }
            y += h;
        }
        let oracle = sum / count as f64;
        let cfg = CellConfig {
            providers: 1,
            users_per_provider: 100_000,
            antennas: 100_000,
            ..CellConfig::default()
        };
        let users = place_users(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mean = users.iter().map(|u| u.distance).sum::<f64>() / users.len() as f64;
        assert!((mean - oracle).abs() / oracle < 0.02, "{mean} vs {oracle}");
    }

    #[test]
    fn pathloss_examples() {
        assert!((pathloss_db(1.0, 0.0) + 31.54).abs() < 1e-12);
        assert!((pathloss_db(10.0, 0.0) + 64.54).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((pathloss_shadowing(10.0, &mut rng, 0.0).unwrap() - 10f64.powf(-6.454)).abs() < 1e-18);
        assert!(pathloss_shadowing(0.0, &mut rng, 8.0).is_err());
    }

    #[test]
    fn shadowing_std_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let psis: Vec<f64> = (0..n)
            .map(|_| {
                let b = pathloss_shadowing(1.0, &mut rng, 8.0).unwrap();
                -31.54 - 10.0 * b.log10()
            })
            .collect();
        let mean = psis.iter().sum::<f64>() / n as f64;
        let std = (psis.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((std - 8.0).abs() / 8.0 < 0.02, "{std}");
    }

    #[test]
    fn noise_power_at_defaults() {
        assert!((noise_power_dbm(-174.0, 15e3, 10.0) + 122.239_087_409_443_2).abs() < 1e-9);
    }

    #[test]
    fn channel_step_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = channel_init(4, 2.0, &mut rng);
        assert_eq!(channel_step(&h, 2.0, 1.0, &mut rng), h);
        // α_h = 0: fresh draws with variance β
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += channel_step(&h, 2.0, 0.0, &mut rng)[0].norm_sqr();
        }
        assert!((acc / n as f64 - 2.0).abs() / 2.0 < 0.02);
    }

    #[test]
    fn ar1_correlation_and_stationary_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gain = 3.0;
        let mut h = channel_init(1, gain, &mut rng);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            xs.push(h[0]);
            h = channel_step(&h, gain, 0.997, &mut rng);
        }
        let var = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let lag: f64 = xs.windows(2).map(|w| (w[1] * w[0].conj()).re).sum::<f64>() / (n - 1) as f64;
        assert!((lag / var - 0.997).abs() < 0.002, "{}", lag / var);
        // Per-entry variance over 10⁵ steps, pooled across 32 independent
        // entries because consecutive samples are strongly correlated.
        let mut h = channel_init(32, gain, &mut rng);
        let mut total = 0.0;
        for _ in 0..n {
            total += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
            h = channel_step(&h, gain, 0.997, &mut rng);
        }
        let v = total / (32 * n) as f64;
        assert!((v - gain).abs() / gain < 0.05, "{v}");
    }
}
