//! Voltage-forming controller: shaped power channels set the frequency and
//! the voltage reference, an inner voltage/current cascade realizes them.

use serde::{Deserialize, Serialize};

use super::channel::{ChannelGains, ShapedChannel};
use super::inner::{CurrentLoop, CurrentLoopGains, VoltageLoop, VoltageLoopGains};
use super::transition::TransitionSchedule;
use super::{clamp_modulation, ControlCommand, ControlError, LocalMeasurements};
use crate::plant::{DqPair, PlantParams};

/// Which outer behaviour the controller was built for. `Droop` zeroes the
/// integral gains, making the leakage schedule irrelevant; `Shaped` keeps
/// them and follows the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormingKind {
    Droop,
    Shaped,
}

/// Construction parameters for [`FormingControl`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FormingConfig {
    pub gains_p: ChannelGains,
    pub gains_q: ChannelGains,
    pub schedule: TransitionSchedule,
    pub voltage: VoltageLoopGains,
    pub current: CurrentLoopGains,
    pub p_set: f64,
    pub q_set: f64,
}

impl FormingConfig {
    /// Reference tuning at measurement bandwidth `omega_lpf`, leakage fixed
    /// by `schedule`, zero power setpoints.
    pub fn shaped_defaults(plant: &PlantParams, omega_lpf: f64, schedule: TransitionSchedule) -> FormingConfig {
        FormingConfig {
            gains_p: ChannelGains::active_default(omega_lpf),
            gains_q: ChannelGains::reactive_default(omega_lpf),
            schedule,
            voltage: VoltageLoopGains::default(),
            current: CurrentLoopGains::from_time_constant(plant, 1e-4),
            p_set: 0.0,
            q_set: 0.0,
        }
    }

    /// Plain droop at the same proportional gains.
    pub fn droop_defaults(plant: &PlantParams, omega_lpf: f64) -> FormingConfig {
        let mut c = FormingConfig::shaped_defaults(plant, omega_lpf, TransitionSchedule::constant(0.0));
        c.gains_p.k_i = 0.0;
        c.gains_q.k_i = 0.0;
        c
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        self.gains_p.validate()?;
        self.gains_q.validate()?;
        self.schedule.validate()?;
        self.voltage.validate()?;
        self.current.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormingControl {
    pub kind: FormingKind,
    pub p_set: f64,
    pub q_set: f64,
    v_nom: f64,
    omega_nom: f64,
    schedule: TransitionSchedule,
    ch_p: ShapedChannel,
    ch_q: ShapedChannel,
    voltage: VoltageLoop,
    current: CurrentLoop,
    plant: PlantParams,
}

impl FormingControl {
    pub fn new(kind: FormingKind, mut config: FormingConfig, plant: &PlantParams) -> Result<FormingControl, ControlError> {
        if kind == FormingKind::Droop {
            config.gains_p.k_i = 0.0;
            config.gains_q.k_i = 0.0;
        }
        config.validate()?;
        Ok(FormingControl {
            kind,
            p_set: config.p_set,
            q_set: config.q_set,
            v_nom: plant.v_0,
            omega_nom: plant.omega_0,
            schedule: config.schedule,
            ch_p: ShapedChannel::new(config.gains_p),
            ch_q: ShapedChannel::new(config.gains_q),
            voltage: VoltageLoop::new(config.voltage),
            current: CurrentLoop::new(config.current),
            plant: *plant,
        })
    }

    pub fn set_setpoints(&mut self, p_set: f64, q_set: f64) {
        self.p_set = p_set;
        self.q_set = q_set;
    }

    /// Current leakage value; meaningful for the shaped kind only.
    pub fn epsilon_at(&self, t: f64) -> f64 {
        self.schedule.epsilon_at(t)
    }

    pub fn schedule(&self) -> &TransitionSchedule {
        &self.schedule
    }

    /// Commanded frequency for the coming sample.
    pub fn frequency_command(&self) -> f64 {
        self.omega_nom + self.ch_p.output()
    }

    /// Commanded d-axis voltage amplitude for the coming sample.
    pub fn voltage_reference(&self) -> f64 {
        self.v_nom + self.ch_q.output()
    }

    pub fn step(&mut self, meas: &LocalMeasurements, t: f64, dt: f64) -> ControlCommand {
        let omega = self.frequency_command();
        let v_ref = DqPair::new(self.voltage_reference(), 0.0);
        let i_l_ref = self.voltage.command(v_ref, meas, &self.plant);
        let (m, saturated) = clamp_modulation(self.current.command(i_l_ref, meas, &self.plant));

        let eps = [
            self.schedule.epsilon_at(t),
            self.schedule.epsilon_at(t + 0.5 * dt),
            self.schedule.epsilon_at(t + dt),
        ];
        self.ch_p.advance(self.p_set - meas.p, eps, dt, saturated);
        self.ch_q.advance(self.q_set - meas.q, eps, dt, saturated);
        if !saturated {
            self.voltage.advance(v_ref, meas.v_c, dt);
            self.current.advance(i_l_ref, meas.i_l, dt);
        }
        ControlCommand { m, omega, saturated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::testutil::run_stiff_grid;
    use crate::plant::power_from_dq;

    const DT: f64 = 5e-5;

    #[test]
    fn droop_forced_to_zero_integral_gain() {
        let p = PlantParams::default();
        let mut cfg = FormingConfig::shaped_defaults(&p, 10.0 * std::f64::consts::PI, TransitionSchedule::constant(0.0));
        cfg.p_set = 1.0;
        let c = FormingControl::new(FormingKind::Droop, cfg, &p).unwrap();
        assert_eq!(c.ch_p.gains.k_i, 0.0);
        assert_eq!(c.ch_q.gains.k_i, 0.0);
    }

    #[test]
    fn shaped_controller_tracks_power_on_nominal_bus() {
        // With zero leakage the integral channel drives the power error to
        // zero against a stiff bus at nominal frequency.
        let p = PlantParams::default();
        let mut cfg = FormingConfig::shaped_defaults(
            &p,
            10.0 * std::f64::consts::PI,
            TransitionSchedule::constant(0.0),
        );
        cfg.p_set = 10e3;
        cfg.q_set = 2e3;
        let mut ctrl = FormingControl::new(FormingKind::Shaped, cfg, &p).unwrap();
        let run = run_stiff_grid(|meas, t, dt| ctrl.step(meas, t, dt), 4.0, DT);
        assert!(!run.last.saturated, "must settle unsaturated");
        assert!((run.meas.p - 10e3).abs() < 30.0, "p = {}", run.meas.p);
        assert!((run.meas.q - 2e3).abs() < 30.0, "q = {}", run.meas.q);
        assert!((run.last.omega - p.omega_0).abs() < 1e-3);
    }

    #[test]
    fn droop_controller_also_settles_to_setpoint_on_nominal_bus() {
        // Droop against a bus at exactly nominal frequency: the angle keeps
        // integrating until the frequency deviation, hence the power error,
        // vanishes.
        let p = PlantParams::default();
        let mut cfg = FormingConfig::droop_defaults(&p, 10.0 * std::f64::consts::PI);
        cfg.p_set = 8e3;
        let mut ctrl = FormingControl::new(FormingKind::Droop, cfg, &p).unwrap();
        let run = run_stiff_grid(|meas, t, dt| ctrl.step(meas, t, dt), 4.0, DT);
        assert!(!run.last.saturated, "must settle unsaturated");
        assert!((run.meas.p - 8e3).abs() < 40.0, "p = {}", run.meas.p);
        // Reactive droop leaves a deliberate residual: the voltage
        // reference obeys v_ref = v_nom + k_q (q_set - q).
        let droop_law = p.v_0 + ctrl.ch_q.gains.k_p * (0.0 - run.meas.q);
        assert!(
            (ctrl.voltage_reference() - droop_law).abs() < 1e-6 * p.v_0,
            "v_ref {} vs law {droop_law}",
            ctrl.voltage_reference()
        );
    }

    #[test]
    fn capacitor_voltage_follows_reference_amplitude() {
        let p = PlantParams::default();
        let cfg = FormingConfig::droop_defaults(&p, 10.0 * std::f64::consts::PI);
        let mut ctrl = FormingControl::new(FormingKind::Droop, cfg, &p).unwrap();
        let run = run_stiff_grid(|meas, t, dt| ctrl.step(meas, t, dt), 3.0, DT);
        assert!(!run.last.saturated, "must settle unsaturated");
        let v_ref = ctrl.voltage_reference();
        assert!(
            (run.meas.v_c.amplitude() - v_ref).abs() < 0.01 * p.v_0,
            "|v_c| = {} vs ref {v_ref}",
            run.meas.v_c.amplitude()
        );
        // The local frame q component is regulated to zero.
        assert!(run.meas.v_c.q.abs() < 0.01 * p.v_0);
    }

    #[test]
    fn saturation_freezes_outer_state() {
        // A tiny DC link forces saturation; the leaky integrals and loop
        // integrators must hold while the error filters keep running.
        let p = PlantParams {
            v_dc: 1.0,
            ..PlantParams::default()
        };
        let cfg = FormingConfig::shaped_defaults(
            &p,
            10.0 * std::f64::consts::PI,
            TransitionSchedule::constant(0.0),
        );
        let mut ctrl = FormingControl::new(FormingKind::Shaped, cfg, &p).unwrap();
        let meas = LocalMeasurements {
            v_c: DqPair::new(100.0, 0.0),
            i_l: DqPair::new(1.0, 0.0),
            i_g: DqPair::new(1.0, 0.0),
            p: power_from_dq(DqPair::new(100.0, 0.0), DqPair::new(1.0, 0.0)).0,
            q: 0.0,
        };
        ctrl.set_setpoints(50e3, 0.0);
        let before = (ctrl.ch_p.state().1, ctrl.ch_q.state().1);
        let cmd = ctrl.step(&meas, 0.0, DT);
        assert!(cmd.saturated);
        assert!((cmd.m.amplitude() - 1.0).abs() < 1e-12);
        assert_eq!((ctrl.ch_p.state().1, ctrl.ch_q.state().1), before);
        assert!(ctrl.ch_p.state().0 != 0.0, "error filter still moves");
    }
}
