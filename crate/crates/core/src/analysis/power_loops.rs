//! Closed-loop transfer functions of the two power channels over the
//! quasi-static line model.
//!
//! With the inner loops assumed ideal, active power reaches the bus through
//! the integrated frequency difference times the line stiffness V_0^2 / Z_g,
//! and reactive power through the voltage amplitude difference times
//! V_0 / Z_g. Closing the shaped regulator K(s) around each channel gives
//! low-order rational functions: a cubic loop for frequency, a quadratic one
//! for voltage. The active loop's monic characteristic cubic and its
//! companion realization are exposed separately because the transition
//! certificate is built on them.

use crate::control::ChannelGains;
use crate::numerics::{Matrix, Polynomial};
use crate::plant::PlantParams;

use super::tf::TransferFunction;

/// Shaped regulator numerator and denominator at a frozen leakage:
/// `K(s) = (k_p + k_i/(s + eps)) * w / (s + w)` as a polynomial ratio.
fn channel_polys(gains: &ChannelGains, eps: f64) -> (Polynomial, Polynomial) {
    let w = gains.omega_lpf;
    let num = Polynomial::new(vec![w * (gains.k_p * eps + gains.k_i), w * gains.k_p]);
    let den = Polynomial::new(vec![eps * w, eps + w, 1.0]);
    (num, den)
}

/// Rational form of the shaped regulator at a frozen leakage value.
pub fn shaped_channel_tf(gains: &ChannelGains, eps: f64) -> TransferFunction {
    let (num, den) = channel_polys(gains, eps);
    TransferFunction::new(num, den).expect("denominator is monic quadratic")
}

/// Plain filtered droop `k_p * w / (s + w)`, the large-leakage limit of the
/// shaped regulator.
pub fn droop_channel_tf(k_p: f64, omega_lpf: f64) -> TransferFunction {
    TransferFunction::new(
        Polynomial::constant(k_p * omega_lpf),
        Polynomial::new(vec![omega_lpf, 1.0]),
    )
    .expect("denominator is monic linear")
}

/// Closed active-power loop: (setpoint-to-power, grid-frequency-to-power)
/// transfer functions. The common denominator is `z_g` times the monic
/// characteristic cubic of [`char_poly_active`].
pub fn active_power_cltf(
    plant: &PlantParams,
    gains: &ChannelGains,
    eps: f64,
) -> (TransferFunction, TransferFunction) {
    let (n_k, d_k) = channel_polys(gains, eps);
    let v0_sq = plant.v_0 * plant.v_0;
    let s = Polynomial::new(vec![0.0, 1.0]);
    // loop: P = (V0^2 / (s Zg)) (K (P0 - P) + w_g - w_0)
    let den = s.mul(&d_k).scale(plant.z_g()).add(&n_k.scale(v0_sq));
    let reference = TransferFunction::new(n_k.scale(v0_sq), den.clone())
        .expect("leading coefficient is z_g > 0");
    let disturbance =
        TransferFunction::new(d_k.scale(v0_sq), den).expect("leading coefficient is z_g > 0");
    (reference, disturbance)
}

/// Closed reactive-power loop: (setpoint-to-power, grid-voltage-to-power)
/// transfer functions. Second order; every denominator coefficient is
/// positive for any positive gains, so this loop is stable unconditionally.
pub fn reactive_power_cltf(
    plant: &PlantParams,
    gains: &ChannelGains,
    eps: f64,
) -> (TransferFunction, TransferFunction) {
    let (n_k, d_k) = channel_polys(gains, eps);
    let v0 = plant.v_0;
    // loop: Q = (V0 / Zg) (K (Q0 - Q) + vbar_g - vbar_0)
    let den = d_k.scale(plant.z_g()).add(&n_k.scale(v0));
    let reference =
        TransferFunction::new(n_k.scale(v0), den.clone()).expect("leading coefficient is z_g > 0");
    let disturbance =
        TransferFunction::new(d_k.scale(v0), den).expect("leading coefficient is z_g > 0");
    (reference, disturbance)
}

/// Monic characteristic cubic of the active-power loop,
/// `s^3 + (w + eps) s^2 + (w eps + g w k_p) s + g w (k_p eps + k_i)`
/// with stiffness `g = V_0^2 / z_g`. Its coefficients are affine in the
/// leakage, which is what makes the transition certificate tractable.
pub fn char_poly_active(plant: &PlantParams, gains: &ChannelGains, eps: f64) -> Polynomial {
    let g = plant.v_0 * plant.v_0 / plant.z_g();
    let w = gains.omega_lpf;
    let a2 = w + eps;
    let a1 = w * eps + g * w * gains.k_p;
    let a0 = g * w * (gains.k_p * eps + gains.k_i);
    Polynomial::new(vec![a0, a1, a2, 1.0])
}

/// Companion realization `A(eps)` of the active-loop cubic, together with
/// the constant matrix `B` of the affine decomposition `A(eps) = A(0) + eps B`.
pub fn state_matrix(plant: &PlantParams, gains: &ChannelGains, eps: f64) -> (Matrix, Matrix) {
    let p = char_poly_active(plant, gains, eps);
    let a = Matrix::from_rows(&[
        &[0.0, 1.0, 0.0],
        &[0.0, 0.0, 1.0],
        &[-p.coeff(0), -p.coeff(1), -p.coeff(2)],
    ]);
    let g = plant.v_0 * plant.v_0 / plant.z_g();
    let w = gains.omega_lpf;
    let b = Matrix::from_rows(&[
        &[0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0],
        &[-g * w * gains.k_p, -w, -1.0],
    ]);
    (a, b)
}
