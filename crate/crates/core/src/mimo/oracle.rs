//! Semi-closed-form minimizer of `Σ_s w_s‖H_sV − D_s‖_F²` over
//! `‖V‖_F² ≤ P̄`.
//!
//! With `A = Σ w Hᴴ H = U Λ Uᴴ` and `C = Uᴴ Σ w Hᴴ D`, the KKT point is
//! `V(λ) = U (Λ + λI)⁻¹ C`. The minimum-norm solution at `λ = 0` is used when
//! it is feasible; otherwise `λ` is found by bisection on the power.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;

use super::{fro_sq, precoding_deviation, CMatrix, MimoError};

pub const POWER_TOLERANCE: f64 = 1e-9;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct MimoOracleSolution {
    pub precoder: CMatrix,
    pub multiplier: f64,
    pub objective: f64,
    /// `|‖V‖² − P̄|/P̄` when the budget binds, zero otherwise.
    pub power_error: f64,
    pub bisections: usize,
}

/// Minimizes the weighted deviation over the `P̄` ball.
pub fn per_period_mimo_oracle(
    terms: &[(&CMatrix, &CMatrix, f64)],
    p_bar: f64,
) -> Result<MimoOracleSolution, MimoError> {
    let (h0, d0, _) = terms.first().ok_or_else(|| MimoError::Shape("no feedback".into()))?;
    if !(p_bar > 0.0) {
        return Err(MimoError::Config(format!("P̄ must be positive, got {p_bar}")));
    }
    let (n, k) = (h0.ncols(), d0.ncols());
    let mut a = CMatrix::zeros(n, n);
    let mut b = CMatrix::zeros(n, k);
    for (h, d, w) in terms {
        if !(*w > 0.0) {
            return Err(MimoError::Config(format!("weights must be positive, got {w}")));
        }
        if h.ncols() != n || d.ncols() != k || h.nrows() != d.nrows() {
            return Err(MimoError::Shape("inconsistent feedback shapes".into()));
        }
        let hh = h.adjoint();
        a += &hh * *h * Complex64::new(*w, 0.0);
        b += hh * *d * Complex64::new(*w, 0.0);
    }
    // symmetrize against rounding before the Hermitian eigensolver
    let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(a);
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let c = eig.eigenvectors.adjoint() * b;
    let row_sq: Vec<f64> = (0..n).map(|j| c.row(j).iter().map(|z| z.norm_sqr()).sum()).collect();
    let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
    let cutoff = lmax * 1e-12 * n as f64;

    let power = |lam: f64| -> f64 {
        (0..n)
            .filter(|&j| lam > 0.0 || lambdas[j] > cutoff)
            .map(|j| row_sq[j] / (lambdas[j] + lam).powi(2))
            .sum()
    };
    let assemble = |lam: f64| -> CMatrix {
        let mut scaled = c.clone();
        for j in 0..n {
            let s = if lam > 0.0 || lambdas[j] > cutoff {
                1.0 / (lambdas[j] + lam)
            } else {
                0.0
            };
            scaled.row_mut(j).scale_mut(s);
        }
        &eig.eigenvectors * scaled
    };
    let objective = |v: &CMatrix| -> f64 {
        terms
            .iter()
            .map(|(h, d, w)| w * precoding_deviation(h, v, d).unwrap_or(f64::NAN))
            .sum()
    };

    if power(0.0) <= p_bar {
        let v = assemble(0.0);
        let obj = objective(&v);
        return Ok(MimoOracleSolution {
            precoder: v,
            multiplier: 0.0,
            objective: obj,
            power_error: 0.0,
            bisections: 0,
        });
    }

    let c_norm = row_sq.iter().sum::<f64>().sqrt();
    let mut lo = 0.0;
    let mut hi = c_norm / p_bar.sqrt();
    if !(hi > 0.0) || !hi.is_finite() || power(hi) > p_bar {
        return Err(MimoError::Bisection(format!("no bracket, upper end {hi}")));
    }
    let mut it = 0;
    while (p_bar - power(hi)) / p_bar > POWER_TOLERANCE {
        if it == MAX_BISECTIONS {
            return Err(MimoError::Bisection(format!(
                "power error {:.3e} after {it} steps",
                (p_bar - power(hi)) / p_bar
            )));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power(mid) > p_bar {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
    }
    let v = assemble(hi);
    let obj = objective(&v);
    let power_error = (fro_sq(&v) - p_bar).abs() / p_bar;
    Ok(MimoOracleSolution {
        precoder: v,
        multiplier: hi,
        objective: obj,
        power_error,
        bisections: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(re: f64, im: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::new(re, im))
    }

    /// Brute-force minimizer over the complex disk `|v|² ≤ p_bar`: a coarse
    /// grid, a fine grid around the coarse winner, and a dense sweep of the
    /// boundary circle.
    fn grid_min(f: impl Fn(Complex64) -> f64, p_bar: f64) -> Complex64 {
        let r = p_bar.sqrt();
        let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
        let consider = |best: &mut (f64, Complex64), z: Complex64| {
            if z.norm_sqr() <= p_bar {
                let v = f(z);
                if v < best.0 {
                    *best = (v, z);
                }
            }
        };
        let sweep = |best: &mut (f64, Complex64), center: Complex64, half: f64, h: f64| {
            let n = (2.0 * half / h).ceil() as i64;
            for i in 0..=n {
                for j in 0..=n {
                    consider(
                        best,
                        center + Complex64::new(-half + i as f64 * h, -half + j as f64 * h),
                    );
                }
            }
            for k in 0..1_000_000 {
                let th = std::f64::consts::TAU * k as f64 / 1e6;
                consider(best, Complex64::from_polar(r * (1.0 - 1e-15), th));
            }
        };
        sweep(&mut best, Complex64::new(0.0, 0.0), r, 1e-2);
        let coarse = best.1;
        sweep(&mut best, coarse, 2e-2, 1e-4);
        best.1
    }

    #[test]
    fn binding_scalar_example() {
        let (h, d) = (s(1.0, 0.0), s(2.0, 0.0));
        let sol = per_period_mimo_oracle(&[(&h, &d, 1.0)], 1.0).unwrap();
        assert!((sol.multiplier - 1.0).abs() < 1e-8);
        assert!((sol.precoder[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(sol.power_error <= POWER_TOLERANCE);
        let g = grid_min(|z| (z - Complex64::new(2.0, 0.0)).norm_sqr(), 1.0);
        assert!((sol.precoder[(0, 0)] - g).norm() < 1e-2);
    }

    #[test]
    fn interior_scalar_example() {
        let (h, d) = (s(1.0, 0.0), s(0.5, 0.0));
        let sol = per_period_mimo_oracle(&[(&h, &d, 1.0)], 1.0).unwrap();
        assert_eq!(sol.multiplier, 0.0);
        assert!((sol.precoder[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weighted_complex_scalar_matches_grid() {
        let h1 = s(0.8, -0.6);
        let d1 = s(1.5, 0.5);
        let h2 = s(-0.3, 1.1);
        let d2 = s(0.2, -1.4);
        let terms = [(&h1, &d1, 2.0), (&h2, &d2, 0.5)];
        let sol = per_period_mimo_oracle(&terms, 0.8).unwrap();
        let f = |z: Complex64| {
            2.0 * (h1[(0, 0)] * z - d1[(0, 0)]).norm_sqr() + 0.5 * (h2[(0, 0)] * z - d2[(0, 0)]).norm_sqr()
        };
        let g = grid_min(f, 0.8);
        assert!((sol.precoder[(0, 0)] - g).norm() < 1e-3);
        assert!(f(sol.precoder[(0, 0)]) <= f(g) + 1e-9);
    }

    #[test]
    fn orthonormal_channel_gives_projected_least_squares() {
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
                Complex64::new(0.0, 0.8),
                Complex64::new(0.6, 0.0),
            ],
        );
        assert!((h.adjoint() * &h - CMatrix::identity(2, 2)).norm() < 1e-12);
        let d = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let ls = h.adjoint() * &d;
        let p_bar = 0.5;
        let expected = &ls * Complex64::new((p_bar / fro_sq(&ls)).sqrt(), 0.0);
        let sol = per_period_mimo_oracle(&[(&h, &d, 1.0)], p_bar).unwrap();
        assert!((sol.precoder - expected).norm() < 1e-6);
    }

    #[test]
    fn rank_deficient_system_uses_min_norm_solution() {
        // one user, three antennas: A has rank one
        let h = CMatrix::from_row_slice(
            1,
            3,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(1.0, 1.0),
            ],
        );
        let d = s(0.5, 0.0);
        let sol = per_period_mimo_oracle(&[(&h, &d, 1.0)], 10.0).unwrap();
        let expected = h.adjoint() * Complex64::new(0.5 / fro_sq(&h), 0.0);
        assert!((sol.precoder - expected).norm() < 1e-12);
        assert!(sol.objective < 1e-20);
    }
}
