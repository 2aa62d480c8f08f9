//! Precoding deviation, power constraint, the closed-form algorithm updates
//! and user rates.

use num_complex::Complex64;

use super::{fro_sq, CMatrix, MimoError};

/// One delivered feedback: channel and demand at the slot it describes.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub channel: &'a CMatrix,
    pub demand: &'a CMatrix,
}

fn check_shapes(h: &CMatrix, v: &CMatrix, d: &CMatrix) -> Result<(), MimoError> {
    if h.ncols() != v.nrows() || h.nrows() != d.nrows() || v.ncols() != d.ncols() {
        return Err(MimoError::Shape(format!(
            "H {}×{}, V {}×{}, D {}×{}",
            h.nrows(),
            h.ncols(),
            v.nrows(),
            v.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    Ok(())
}

/// `‖HV − D‖_F²`.
pub fn precoding_deviation(h: &CMatrix, v: &CMatrix, d: &CMatrix) -> Result<f64, MimoError> {
    check_shapes(h, v, d)?;
    Ok(fro_sq(&(h * v - d)))
}

/// `Hᴴ(HV − D)`, half the gradient in the real embedding.
pub fn half_gradient(h: &CMatrix, v: &CMatrix, d: &CMatrix) -> CMatrix {
    h.adjoint() * (h * v - d)
}

/// `g(V) = ‖V‖_F² − P̄`.
pub fn power_constraint_g(v: &CMatrix, p_bar: f64) -> f64 {
    fro_sq(v) - p_bar
}

/// Scales `x` onto the ball `‖x‖_F² ≤ radius_sq` if it lies outside.
pub fn project_power(x: CMatrix, radius_sq: f64) -> CMatrix {
    let n2 = fro_sq(&x);
    if n2 <= radius_sq {
        x
    } else {
        x * Complex64::new((radius_sq / n2).sqrt(), 0.0)
    }
}

fn aggregated_half_gradient(v: &CMatrix, feedbacks: &[Feedback<'_>], duration: usize) -> Result<CMatrix, MimoError> {
    let first = feedbacks
        .first()
        .ok_or_else(|| MimoError::Shape("no feedback".into()))?;
    check_shapes(first.channel, v, first.demand)?;
    let mut sum = CMatrix::zeros(v.nrows(), v.ncols());
    for f in feedbacks {
        check_shapes(f.channel, v, f.demand)?;
        sum += half_gradient(f.channel, v, f.demand);
    }
    Ok(sum * Complex64::new(duration as f64 / feedbacks.len() as f64, 0.0))
}

/// One descent step `P(Ṽ − (T_i/(αS_i)) Σ Hᴴ(HṼ − D))` on the `P_max` ball.
pub fn pqga_mimo_inner_step(
    v: &CMatrix,
    feedbacks: &[Feedback<'_>],
    duration: usize,
    alpha: f64,
    p_max: f64,
) -> Result<CMatrix, MimoError> {
    let grad = aggregated_half_gradient(v, feedbacks, duration)?;
    let x = v - grad * Complex64::new(1.0 / alpha, 0.0);
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MimoError::NonFinite("descent step"));
    }
    Ok(project_power(x, p_max))
}

/// Scalars of the decision update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionWeights {
    pub alpha: f64,
    pub eta: f64,
    /// `[Q_{i+1} + γT_i g(V_i)]·γT_{i+1}`.
    pub penalty: f64,
}

/// `P([αṼᴶ + ηV_i − (T_i/S_i) Σ Hᴴ(HṼᴶ − D)] / (α + η + w))` on the `P_max` ball.
pub fn pqga_mimo_decision(
    anchor: &CMatrix,
    previous: &CMatrix,
    feedbacks: &[Feedback<'_>],
    duration: usize,
    weights: DecisionWeights,
    p_max: f64,
) -> Result<CMatrix, MimoError> {
    let denom = weights.alpha + weights.eta + weights.penalty;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(MimoError::NonFinite("decision denominator"));
    }
    let grad = aggregated_half_gradient(anchor, feedbacks, duration)?;
    let num = anchor * Complex64::new(weights.alpha, 0.0) + previous * Complex64::new(weights.eta, 0.0) - grad;
    let x = num * Complex64::new(1.0 / denom, 0.0);
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MimoError::NonFinite("decision"));
    }
    Ok(project_power(x, p_max))
}

/// Per-user `log₂(1 + SINR_k)` with `SINR_k = |h_kᵀv_k|² / (Σ_{j≠k} |h_kᵀv_j|² + σ²)`.
pub fn sinr_and_rate(h: &CMatrix, v: &CMatrix, noise_power: f64) -> Vec<f64> {
    let hv = h * v;
    (0..hv.nrows())
        .map(|k| {
            let signal = hv[(k, k)].norm_sqr();
            let interference: f64 = (0..hv.ncols()).filter(|&j| j != k).map(|j| hv[(k, j)].norm_sqr()).sum();
            (1.0 + signal / (interference + noise_power)).log2()
        })
        .collect()
}
