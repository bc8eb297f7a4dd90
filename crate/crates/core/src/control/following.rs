//! Conventional current-following controller: a PLL locks the local frame
//! to the bus voltage and the power references are converted directly to
//! line-current commands.

use serde::{Deserialize, Serialize};

use super::inner::{CurrentLoop, CurrentLoopGains};
use super::pll::{Pll, PllGains};
use super::{clamp_modulation, ControlCommand, ControlError, LocalMeasurements};
use crate::plant::{DqPair, PlantParams};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FollowingConfig {
    pub pll: PllGains,
    pub current: CurrentLoopGains,
    pub p_set: f64,
    pub q_set: f64,
    /// Per-axis slew limit on the line-current reference, amps per second.
    /// An unlimited step of tens of amps collapses the capacitor voltage
    /// faster than the PLL can follow and the frame loses lock for good.
    pub ref_slew: f64,
    /// Virtual conductance (siemens) damping the filter-capacitor tank.
    ///
    /// The capacitor and the line inductor resonate near 3.7 krad/s with
    /// only the line resistance damping them, and the capacitor-voltage
    /// feed-forward inside the current loop pumps that tank through the
    /// loop lag. A small conductance applied to the high-passed capacitor
    /// voltage absorbs the ring; the term vanishes in steady state.
    pub damp_g: f64,
    /// Corner (rad/s) of the average tracker whose difference from the
    /// measured capacitor voltage isolates the ring for `damp_g`.
    pub damp_w: f64,
}

impl FollowingConfig {
    pub fn defaults(plant: &PlantParams) -> FollowingConfig {
        FollowingConfig {
            pll: PllGains::default(),
            current: CurrentLoopGains::from_time_constant(plant, 1e-4),
            p_set: 0.0,
            q_set: 0.0,
            ref_slew: 500.0,
            damp_g: 0.04,
            damp_w: 400.0,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        self.pll.validate()?;
        self.current.validate()?;
        if !(self.ref_slew > 0.0) || !self.ref_slew.is_finite() {
            return Err(ControlError::InvalidGain {
                name: "ref_slew",
                value: self.ref_slew,
            });
        }
        if !(self.damp_g >= 0.0) || !self.damp_g.is_finite() {
            return Err(ControlError::InvalidGain {
                name: "damp_g",
                value: self.damp_g,
            });
        }
        if !(self.damp_w > 0.0) || !self.damp_w.is_finite() {
            return Err(ControlError::InvalidGain {
                name: "damp_w",
                value: self.damp_w,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowingControl {
    pub p_set: f64,
    pub q_set: f64,
    v_nom: f64,
    ref_slew: f64,
    i_ref: DqPair,
    damp_g: f64,
    damp_w: f64,
    v_bar: DqPair,
    pll: Pll,
    current: CurrentLoop,
    plant: PlantParams,
}

impl FollowingControl {
    pub fn new(config: FollowingConfig, plant: &PlantParams) -> Result<FollowingControl, ControlError> {
        config.validate()?;
        Ok(FollowingControl {
            p_set: config.p_set,
            q_set: config.q_set,
            v_nom: plant.v_0,
            ref_slew: config.ref_slew,
            i_ref: DqPair::ZERO,
            damp_g: config.damp_g,
            damp_w: config.damp_w,
            v_bar: DqPair::new(plant.v_0, 0.0),
            pll: Pll::new(config.pll, plant.omega_0),
            current: CurrentLoop::new(config.current),
            plant: *plant,
        })
    }

    pub fn set_setpoints(&mut self, p_set: f64, q_set: f64) {
        self.p_set = p_set;
        self.q_set = q_set;
    }

    /// Line-current reference implied by the power setpoints at nominal
    /// voltage: i_d = 2 P / (3 V), i_q = -2 Q / (3 V).
    pub fn line_current_reference(&self) -> DqPair {
        DqPair::new(
            2.0 * self.p_set / (3.0 * self.v_nom),
            -2.0 * self.q_set / (3.0 * self.v_nom),
        )
    }

    /// Reference actually in force, after the slew limiter.
    pub fn active_reference(&self) -> DqPair {
        self.i_ref
    }

    pub fn step(&mut self, meas: &LocalMeasurements, _t: f64, dt: f64) -> ControlCommand {
        let omega = self.pll.omega(meas.v_c.q);
        let target = self.line_current_reference();
        let cap = self.ref_slew * dt;
        self.i_ref = DqPair::new(
            self.i_ref.d + (target.d - self.i_ref.d).clamp(-cap, cap),
            self.i_ref.q + (target.q - self.i_ref.q).clamp(-cap, cap),
        );
        // Feed the capacitor's reactive draw forward at the tracked
        // frequency so the line current lands on the reference.
        let b_c = self.plant.c_i * omega;
        // Ring component of the capacitor voltage; the tracker only follows
        // what is slow compared to the tank frequency.
        let ring = meas.v_c - self.v_bar;
        self.v_bar = self.v_bar + ring * (self.damp_w * dt);
        let i_g_ref = self.i_ref;
        let i_l_ref = DqPair::new(
            i_g_ref.d - b_c * meas.v_c.q - self.damp_g * ring.d,
            i_g_ref.q + b_c * meas.v_c.d - self.damp_g * ring.q,
        );
        let (m, saturated) = clamp_modulation(self.current.command(i_l_ref, meas, &self.plant));
        self.pll.advance(meas.v_c.q, dt, saturated);
        if !saturated {
            self.current.advance(i_l_ref, meas.i_l, dt);
        }
        ControlCommand { m, omega, saturated }
    }
}
