//! Electrical parameters of one inverter: LC filter, series line to the
//! point of common coupling, DC-link voltage, and the nominal grid values.

use serde::{Deserialize, Serialize};

use super::PlantError;

/// All units SI: ohms, henries, farads, volts, rad/s. Voltages are phase
/// amplitudes (amplitude-invariant dq convention).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Filter inductor series resistance.
    pub r_i: f64,
    /// Filter inductance.
    pub l_i: f64,
    /// Filter capacitance.
    pub c_i: f64,
    /// Line resistance to the point of common coupling.
    pub r_g: f64,
    /// Line inductance to the point of common coupling.
    pub l_g: f64,
    /// DC-link voltage. Not part of the reference operating point in the
    /// source study; 1000 V leaves |m| ~ 0.78 at the 391 V operating point.
    pub v_dc: f64,
    /// Nominal phase voltage amplitude.
    pub v_0: f64,
    /// Nominal angular grid frequency.
    pub omega_0: f64,
}

impl Default for PlantParams {
    /// Reference bench values used throughout the built-in scenarios.
    fn default() -> PlantParams {
        PlantParams {
            r_i: 0.2,
            l_i: 3.3e-3,
            c_i: 40e-6,
            r_g: 0.1,
            l_g: 1.86e-3,
            v_dc: 1000.0,
            v_0: 391.0,
            omega_0: 2.0 * std::f64::consts::PI * 60.0,
        }
    }
}

impl PlantParams {
    /// Line impedance magnitude at the nominal frequency.
    pub fn z_g(&self) -> f64 {
        self.r_g.hypot(self.omega_0 * self.l_g)
    }

    /// Line impedance angle at the nominal frequency.
    pub fn phi_g(&self) -> f64 {
        (self.omega_0 * self.l_g).atan2(self.r_g)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let checks = [
            ("r_i", self.r_i),
            ("l_i", self.l_i),
            ("c_i", self.c_i),
            ("r_g", self.r_g),
            ("l_g", self.l_g),
            ("v_dc", self.v_dc),
            ("v_0", self.v_0),
            ("omega_0", self.omega_0),
        ];
        for (name, value) in checks {
            if !(value > 0.0) || !value.is_finite() {
                return Err(PlantError::NonPositiveParameter { name, value });
            }
        }
        Ok(())
    }
}
