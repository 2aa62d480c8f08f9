//! Zero-forcing virtualization demands.

use num_complex::Complex64;

use super::{fro_sq, CMatrix, MimoError};

/// Per-SP ZF precoders and the block-diagonal demand `D = blkdiag{HᵐWᵐ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualizationDemand {
    pub demand: CMatrix,
    pub precoders: Vec<CMatrix>,
    /// ZF gain `ϖᵐ` of each SP, so that `HᵐWᵐ = ϖᵐI`.
    pub gains: Vec<f64>,
}

/// ZF precoder `Wᵐ = ϖᵐHᵐᴴ(HᵐHᵐᴴ)⁻¹` with `‖Wᵐ‖_F² = P_max/M` for each
/// SP block of `channel` (rows grouped by SP, `users_per_sp` rows each).
pub fn zf_demand(channel: &CMatrix, users_per_sp: usize, p_max: f64) -> Result<VirtualizationDemand, MimoError> {
    let k = channel.nrows();
    if users_per_sp == 0 || !k.is_multiple_of(users_per_sp) {
        return Err(MimoError::Shape(format!(
            "{k} users do not split into SPs of {users_per_sp}"
        )));
    }
    let m = k / users_per_sp;
    let power = p_max / m as f64;
    let mut demand = CMatrix::zeros(k, k);
    let mut precoders = Vec::with_capacity(m);
    let mut gains = Vec::with_capacity(m);
    for sp in 0..m {
        let rows = channel.rows(sp * users_per_sp, users_per_sp).into_owned();
        let gram = &rows * rows.adjoint();
        let scale = (0..users_per_sp).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
        let chol = gram.cholesky().ok_or(MimoError::RankDeficient { sp })?;
        let pivot = (0..users_per_sp)
            .map(|i| chol.l_dirty()[(i, i)].re)
            .fold(f64::INFINITY, f64::min);
        if !(pivot * pivot > 1e-12 * scale) {
            return Err(MimoError::RankDeficient { sp });
        }
        // Hᴴ(HHᴴ)⁻¹ = (HHᴴ)⁻¹H, adjointed
        let pinv = chol.solve(&rows).adjoint();
        let norm_sq = fro_sq(&pinv);
        if !(norm_sq > 0.0) || !norm_sq.is_finite() {
            return Err(MimoError::RankDeficient { sp });
        }
        let gain = (power / norm_sq).sqrt();
        let w = pinv * Complex64::new(gain, 0.0);
        for i in 0..users_per_sp {
            demand[(sp * users_per_sp + i, sp * users_per_sp + i)] = Complex64::new(gain, 0.0);
        }
        precoders.push(w);
        gains.push(gain);
    }
    Ok(VirtualizationDemand {
        demand,
        precoders,
        gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_channel(k: usize, n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<Complex64>> = (0..k)
            .map(|_| super::super::channel::channel_init(n, 1.0, &mut rng))
            .collect();
        CMatrix::from_fn(k, n, |i, j| rows[i][j])
    }

    #[test]
    fn single_user_zf_is_matched_filter() {
        let h = CMatrix::from_row_slice(
            1,
            3,
            &[
                Complex64::new(1.0, 1.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(0.5, 0.0),
            ],
        );
        let d = zf_demand(&h, 1, 2.0).unwrap();
        let hn = fro_sq(&h).sqrt();
        let expected = h.adjoint() * Complex64::new(2f64.sqrt() / hn, 0.0);
        assert!((&d.precoders[0] - &expected).norm() < 1e-12);
        assert!((d.demand[(0, 0)] - Complex64::new(2f64.sqrt() * hn, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zf_identity_power_and_block_structure() {
        for seed in 0..20 {
            let h = random_channel(6, 8, seed);
            let d = zf_demand(&h, 2, 2.0).unwrap();
            for (sp, w) in d.precoders.iter().enumerate() {
                assert!((fro_sq(w) - 2.0 / 3.0).abs() <= 1e-9 * 2.0 / 3.0);
                let hw = h.rows(sp * 2, 2) * w;
                let target = CMatrix::identity(2, 2) * Complex64::new(d.gains[sp], 0.0);
                assert!((hw - target).norm() <= 1e-9 * d.gains[sp]);
            }
            for i in 0..6 {
                for j in 0..6 {
                    if i / 2 != j / 2 {
                        assert_eq!(d.demand[(i, j)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn rank_deficient_block_is_named() {
        let mut h = random_channel(4, 3, 1);
        let row = h.row(2).into_owned();
        h.set_row(3, &row);
        assert_eq!(zf_demand(&h, 2, 1.0), Err(MimoError::RankDeficient { sp: 1 }));
    }
}
