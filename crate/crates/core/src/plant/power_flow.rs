//! Steady-state power flow over one line, exact and small-angle forms.
//!
//! These are analysis conveniences on phasor amplitudes, so no 3/2 factor
//! appears; the simulation measures its powers from instantaneous dq
//! signals instead.

use super::params::PlantParams;
use crate::numerics::Complex;

/// Sending-end active/reactive power from a source at amplitude `v_c_amp`,
/// angle `theta_c` through the line to a sink at `v_g_amp`, `theta_g`.
pub fn exact_power_flow(
    v_c_amp: f64,
    theta_c: f64,
    v_g_amp: f64,
    theta_g: f64,
    p: &PlantParams,
) -> (f64, f64) {
    let v_c = Complex::from_polar(v_c_amp, theta_c);
    let v_g = Complex::from_polar(v_g_amp, theta_g);
    let z = Complex::new(p.r_g, p.omega_0 * p.l_g);
    let i = (v_c - v_g) / z;
    let s = v_c * i.conj();
    (s.re, s.im)
}

/// First-order power flow around the nominal point for a predominantly
/// inductive line: active power follows the angle, reactive power the
/// amplitude difference.
pub fn linearized_power_flow(delta: f64, v_c_amp: f64, p: &PlantParams) -> (f64, f64) {
    let z = p.z_g();
    (
        p.v_0 * p.v_0 / z * delta,
        p.v_0 / z * (v_c_amp - p.v_0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn aligned_equal_voltages_carry_no_power() {
        let p = PlantParams::default();
        let (pw, qv) = exact_power_flow(391.0, 0.7, 391.0, 0.7, &p);
        assert!(pw.abs() < 1e-9);
        assert!(qv.abs() < 1e-9);
        let (pw, qv) = linearized_power_flow(0.0, 391.0, &p);
        assert_eq!(pw, 0.0);
        assert_eq!(qv, 0.0);
    }

    #[test]
    fn small_angle_active_power_value() {
        // v_0^2 / z_g * 0.01 rad = 391^2 * 0.01 / 0.7082981863 = 2158.43 W.
        let p = PlantParams::default();
        let (pw, _) = linearized_power_flow(0.01, 391.0, &p);
        assert!((pw - 2158.43).abs() < 0.05, "pw = {pw}");
        // The exact flow agrees to the few-percent level at this angle.
        let (pe, _) = exact_power_flow(391.0, 0.01, 391.0, 0.0, &p);
        assert!((pe - pw).abs() / pw < 0.03, "pe = {pe}, pw = {pw}");
    }

    #[test]
    fn sending_receiving_difference_is_line_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = PlantParams::default();
        let z = Complex::new(p.r_g, p.omega_0 * p.l_g);
        for _ in 0..100 {
            let vc = rng.gen_range(330.0..450.0);
            let tc: f64 = rng.gen_range(-0.5..0.5);
            let vg = rng.gen_range(330.0..450.0);
            let tg: f64 = rng.gen_range(-0.5..0.5);
            let (p_send, q_send) = exact_power_flow(vc, tc, vg, tg, &p);
            // Receiving end: power into the sink node, same current sign.
            let i = (Complex::from_polar(vc, tc) - Complex::from_polar(vg, tg)) / z;
            let s_recv = Complex::from_polar(vg, tg) * i.conj();
            let i2 = i.abs() * i.abs();
            assert!((p_send - s_recv.re - i2 * p.r_g).abs() < 1e-9 * (1.0 + p_send.abs()));
            assert!(
                (q_send - s_recv.im - i2 * p.omega_0 * p.l_g).abs() < 1e-9 * (1.0 + q_send.abs())
            );
        }
    }

    #[test]
    fn linearization_error_shrinks_quadratically_on_inductive_line() {
        // With the resistance removed the angle channel is third order, so
        // the quadratic amplitude channel dominates the combined error and
        // quartering the angle divides it by about 16.
        let p = PlantParams {
            r_g: 0.0,
            ..PlantParams::default()
        };
        let err = |delta: f64| {
            let (pe, qe) = exact_power_flow(391.0, delta, 391.0, 0.0, &p);
            let (pl, ql) = linearized_power_flow(delta, 391.0, &p);
            (pe - pl).hypot(qe - ql)
        };
        let e1 = err(0.08);
        let e2 = err(0.02);
        let ratio = e1 / e2;
        assert!((10.0..25.0).contains(&ratio), "ratio = {ratio}");
    }
}
