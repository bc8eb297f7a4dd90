//! Small-signal sensitivity of the conventional follower to power mismatch.
//!
//! A conventional current-injecting follower leaves the filter capacitor to
//! absorb any mismatch between commanded and delivered power: active
//! mismatch charges the capacitor amplitude through 1/(C s), and reactive
//! mismatch walks the capacitor phase, which the synchronizing loop turns
//! into a frequency excursion through its own gains over the same
//! integrator. Both channels therefore carry a pole at the origin, and
//! their gain keeps rising as frequency falls; the shaped regulator caps
//! the same maps at its droop gains instead. These functions make that
//! comparison quantitative.

use crate::control::PllGains;
use crate::numerics::Polynomial;
use crate::plant::PlantParams;

use super::tf::TransferFunction;

/// Transfer functions of the conventional follower from power mismatch to
/// its operating point: `(active mismatch -> capacitor voltage amplitude,
/// reactive mismatch -> estimated frequency)`.
///
/// The amplitude channel is `2 / (3 V_0 C_i s)`; the frequency channel is
/// `-2 (k_p s + k_i) / (3 V_0 C_i s^2)` with the synchronizing-loop gains.
pub fn conventional_gfl_sensitivity(
    plant: &PlantParams,
    pll: &PllGains,
) -> (TransferFunction, TransferFunction) {
    let c = 3.0 * plant.v_0 * plant.c_i;
    let amplitude = TransferFunction::new(Polynomial::constant(2.0), Polynomial::new(vec![0.0, c]))
        .expect("denominator coefficient 3 V_0 C_i > 0");
    let frequency = TransferFunction::new(
        Polynomial::new(vec![-2.0 * pll.k_i, -2.0 * pll.k_p]),
        Polynomial::new(vec![0.0, 0.0, c]),
    )
    .expect("denominator coefficient 3 V_0 C_i > 0");
    (amplitude, frequency)
}

#[cfg(test)]
mod tests {
    use crate::control::ChannelGains;

    use super::super::power_loops::shaped_channel_tf;
    use super::*;

    const W_LPF: f64 = 20.0 * std::f64::consts::PI;

    #[test]
    fn both_channels_integrate_mismatch() {
        let plant = PlantParams::default();
        let (amplitude, frequency) = conventional_gfl_sensitivity(&plant, &PllGains::default());
        assert_eq!(amplitude.denominator().eval(0.0), 0.0);
        assert_eq!(frequency.denominator().eval(0.0), 0.0);
        assert_eq!(amplitude.dc_gain(), f64::INFINITY);
        assert_eq!(frequency.dc_gain(), f64::NEG_INFINITY);
        // the amplitude channel is a single integrator, so six decades of
        // frequency buy exactly a factor 1e6; the synchronizing channel has
        // a double pole and gains far more
        let ratio_v = amplitude.magnitude(1e-3) / amplitude.magnitude(1e3);
        assert!(ratio_v >= 1e6 * (1.0 - 1e-9), "{ratio_v}");
        assert!(frequency.magnitude(1e-3) > 1e6 * frequency.magnitude(1e3));
    }

    #[test]
    fn amplitude_gain_is_the_capacitor_integrator() {
        let plant = PlantParams::default();
        let (amplitude, _) = conventional_gfl_sensitivity(&plant, &PllGains::default());
        let expected = 2.0 / (3.0 * plant.v_0 * plant.c_i * 100.0);
        assert!((amplitude.magnitude(100.0) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn conventional_sensitivity_dwarfs_the_shaped_regulator_at_the_filter_corner() {
        // the shaped maps from mismatch to voltage / frequency command are
        // the channel regulators themselves, capped near their droop gains
        let plant = PlantParams::default();
        let (amplitude, frequency) = conventional_gfl_sensitivity(&plant, &PllGains::default());
        let shaped_v = shaped_channel_tf(&ChannelGains::reactive_default(W_LPF), 0.0);
        let shaped_w = shaped_channel_tf(&ChannelGains::active_default(W_LPF), 0.0);
        assert!(amplitude.magnitude(W_LPF) > 100.0 * shaped_v.magnitude(W_LPF));
        assert!(frequency.magnitude(W_LPF) > 100.0 * shaped_w.magnitude(W_LPF));
    }
}
