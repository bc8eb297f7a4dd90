//! Equivalence between filtered droop and a virtual synchronous machine.
//!
//! A swing model `J dw/dt = T_in - T_out - D w` with frequency damping
//! `k_w`, linearized through the torque-to-power approximation at nominal
//! speed, maps power mismatch to frequency as a first-order lag. Filtered
//! Pf droop has exactly that shape, so each can impersonate the other. The
//! catch is a units subtlety: the equivalence `w_lpf = (k_w + D)/J`,
//! `k_p = 1/(k_w + D)` is exact only when the inertia is read as the
//! speed-normalized constant `H = J / w_0`, which is what the swing transfer
//! function actually carries. Both readings are computed side by side so
//! the mismatch of the raw-inertia reading stays visible.

use serde::{Deserialize, Serialize};

use super::tf::{log_grid, max_relative_mismatch, TransferFunction};
use super::AnalysisError;
use crate::numerics::Polynomial;

/// Swing-model parameters. SI units: `j` in kg m^2, the damping terms in
/// N m s, `omega_0` in rad/s.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VsgParams {
    /// Rotor moment of inertia.
    pub j: f64,
    /// Mechanical damping.
    pub d: f64,
    /// Frequency-droop feedback gain.
    pub k_omega: f64,
    /// Nominal angular speed.
    pub omega_0: f64,
}

impl VsgParams {
    /// Speed-normalized inertia constant `H = J / omega_0`.
    pub fn h(&self) -> f64 {
        self.j / self.omega_0
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let checks = [
            ("j", self.j),
            ("d", self.d),
            ("k_omega", self.k_omega),
            ("omega_0", self.omega_0),
        ];
        for (name, value) in checks {
            if !(value > 0.0) || !value.is_finite() {
                return Err(AnalysisError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// The swing transfer function next to both readings of the droop mapping.
#[derive(Debug, Clone)]
pub struct VsgEquivalence {
    /// Power mismatch to frequency through the swing model:
    /// `(1/H) / (s + (k_w + D)/H)`.
    pub swing_tf: TransferFunction,
    /// Filtered droop with the mapping read through `H`; identical to the
    /// swing function.
    pub droop_tf: TransferFunction,
    /// Filtered droop with the mapping read through the raw `J`; same DC
    /// gain, pole shifted by the factor `omega_0`.
    pub droop_tf_raw_inertia: TransferFunction,
    /// Largest relative magnitude mismatch of `droop_tf` against the swing
    /// function over the comparison grid.
    pub mismatch: f64,
    /// Same metric for the raw-inertia reading.
    pub mismatch_raw_inertia: f64,
}

/// Comparison range, rad/s. Wide enough to straddle the pole of any plausible
/// machine, so a wrong pole placement cannot hide off-grid.
const GRID_MIN: f64 = 1e-2;
const GRID_MAX: f64 = 1e3;

/// Builds the swing transfer function and the two droop readings, and
/// measures their magnitude mismatch on a log grid over
/// [`GRID_MIN`, `GRID_MAX`] rad/s.
pub fn vsg_equivalence(params: &VsgParams) -> Result<VsgEquivalence, AnalysisError> {
    params.validate()?;
    let h = params.h();
    let total_damping = params.k_omega + params.d;

    let swing_tf = first_order(1.0 / h, total_damping / h);
    let k_p = 1.0 / total_damping;
    let droop_tf = droop(k_p, total_damping / h);
    let droop_tf_raw_inertia = droop(k_p, total_damping / params.j);

    let grid = log_grid(GRID_MIN, GRID_MAX);
    let mismatch = max_relative_mismatch(&swing_tf, &droop_tf, &grid);
    let mismatch_raw_inertia = max_relative_mismatch(&swing_tf, &droop_tf_raw_inertia, &grid);
    Ok(VsgEquivalence {
        swing_tf,
        droop_tf,
        droop_tf_raw_inertia,
        mismatch,
        mismatch_raw_inertia,
    })
}

/// `gain / (s + pole)`.
fn first_order(gain: f64, pole: f64) -> TransferFunction {
    TransferFunction::new(Polynomial::constant(gain), Polynomial::new(vec![pole, 1.0]))
        .expect("denominator is monic linear")
}

/// `k_p * w / (s + w)`.
fn droop(k_p: f64, w: f64) -> TransferFunction {
    first_order(k_p * w, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> VsgParams {
        VsgParams {
            j: 2.0,
            d: 10.0,
            k_omega: 50.0,
            omega_0: 2.0 * std::f64::consts::PI * 60.0,
        }
    }

    #[test]
    fn normalized_inertia_reading_is_exact() {
        let eq = vsg_equivalence(&bench()).unwrap();
        assert!(eq.mismatch < 1e-12, "mismatch {}", eq.mismatch);
    }

    #[test]
    fn raw_inertia_reading_misses_the_pole_by_the_speed_factor() {
        let params = bench();
        let eq = vsg_equivalence(&params).unwrap();
        assert!(eq.mismatch_raw_inertia > 0.5, "{}", eq.mismatch_raw_inertia);

        let swing_pole = eq.swing_tf.poles().unwrap()[0].re;
        let raw_pole = eq.droop_tf_raw_inertia.poles().unwrap()[0].re;
        assert!((swing_pole / raw_pole - params.omega_0).abs() < 1e-9 * params.omega_0);
    }

    #[test]
    fn dc_gain_halves_when_total_damping_doubles() {
        let a = bench();
        let mut b = a;
        b.d = 2.0 * a.d + a.k_omega; // doubles k_omega + d
        let dc_a = vsg_equivalence(&a).unwrap().swing_tf.dc_gain();
        let dc_b = vsg_equivalence(&b).unwrap().swing_tf.dc_gain();
        assert!((dc_a / dc_b - 2.0).abs() < 1e-12);
        assert!((dc_a - 1.0 / (a.k_omega + a.d)).abs() < 1e-15);
    }

    #[test]
    fn pole_halves_when_inertia_doubles() {
        let a = bench();
        let mut b = a;
        b.j = 2.0 * a.j;
        let pole_a = vsg_equivalence(&a).unwrap().swing_tf.poles().unwrap()[0].re;
        let pole_b = vsg_equivalence(&b).unwrap().swing_tf.poles().unwrap()[0].re;
        assert!((pole_a / pole_b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected_by_name() {
        let mut p = bench();
        p.k_omega = 0.0;
        match vsg_equivalence(&p) {
            Err(AnalysisError::InvalidParameter { name, .. }) => assert_eq!(name, "k_omega"),
            other => panic!("expected parameter error, got {other:?}"),
        }
    }
}
