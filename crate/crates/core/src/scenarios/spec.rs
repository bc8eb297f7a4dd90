//! Declarative scenario description, loadable from TOML.

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::control::{SegmentShape, TransitionSchedule, TransitionSegment};
use crate::plant::{LoadSpec, PlantParams};

/// What the inverters are connected to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// A single inverter against an ideal bus pinned at nominal voltage and
    /// frequency.
    StiffGrid,
    /// Inverters and a constant-impedance load on a shared bus whose voltage
    /// follows from the node equation.
    Islanded,
}

/// Controller family running on one inverter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Conventional follower: PLL plus direct current commands.
    Following,
    /// Frequency-shaped outer channels on a voltage/current cascade; the
    /// leakage schedule moves it between follower and droop behaviour.
    Shaped,
    /// Plain droop (integral gains zeroed, leakage irrelevant).
    Droop,
}

/// One inverter and the controller it runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InverterSpec {
    /// Unique name; becomes the column prefix in the trace.
    pub name: String,
    pub controller: ControllerKind,
    /// Measurement bandwidth of the outer power channels, rad/s. Ignored by
    /// the following controller.
    #[serde(default = "default_omega_lpf")]
    pub omega_lpf: f64,
    #[serde(default)]
    pub p_set: f64,
    #[serde(default)]
    pub q_set: f64,
    /// Initial leakage; shaped controller only.
    #[serde(default)]
    pub epsilon: f64,
    /// Override for the follower's capacitor-tank damping conductance,
    /// siemens. `None` keeps the controller default.
    #[serde(default)]
    pub damp_g: Option<f64>,
}

fn default_omega_lpf() -> f64 {
    20.0 * std::f64::consts::PI
}

/// A timed change applied while the scenario runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent {
    pub t: f64,
    pub action: EventAction,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventAction {
    /// Change an inverter's power setpoints; absent fields keep their value.
    SetPower {
        inverter: String,
        p_w: Option<f64>,
        q_var: Option<f64>,
    },
    /// Add to the bus load.
    LoadStep { p_w: f64, q_var: f64 },
    /// Add to the bus load linearly over `duration` seconds.
    LoadRamp { p_w: f64, q_var: f64, duration: f64 },
    /// Move an inverter's leakage to `eps` with the given shape.
    Transition {
        inverter: String,
        eps: f64,
        shape: SegmentShape,
    },
}

/// One complete experiment description. Identical scenarios produce
/// bit-identical traces: the engine is deterministic end to end.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub topology: Topology,
    /// Recorded span, seconds; events live in [0, duration].
    pub duration: f64,
    /// Controller sample time and plant integration step.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Trace sample period; must be an integer multiple of `dt`.
    #[serde(default = "default_record_dt")]
    pub record_dt: f64,
    /// Settling span simulated before t = 0 with the initial setpoints and
    /// load; nothing is recorded during it.
    #[serde(default = "default_pre_roll")]
    pub pre_roll: f64,
    #[serde(default)]
    pub plant: PlantParams,
    /// Constant-impedance bus load at t = 0; islanded topology only.
    #[serde(default)]
    pub load: LoadSpec,
    pub inverters: Vec<InverterSpec>,
    #[serde(default)]
    pub events: Vec<ScenarioEvent>,
}

fn default_dt() -> f64 {
    5e-5
}

fn default_record_dt() -> f64 {
    5e-4
}

fn default_pre_roll() -> f64 {
    5.0
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let sc: Scenario = toml::from_str(text)
            .map_err(|e| ScenarioError::InvalidScenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    fn invalid(msg: String) -> ScenarioError {
        ScenarioError::InvalidScenario(msg)
    }

    fn inverter_index(&self, name: &str) -> Option<usize> {
        self.inverters.iter().position(|i| i.name == name)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.plant.validate()?;
        for (label, value) in [
            ("duration", self.duration),
            ("dt", self.dt),
            ("record_dt", self.record_dt),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Self::invalid(format!("{label} must be positive, got {value}")));
            }
        }
        if !(self.pre_roll >= 0.0) || !self.pre_roll.is_finite() {
            return Err(Self::invalid(format!(
                "pre_roll must be non-negative, got {}",
                self.pre_roll
            )));
        }
        let ratio = self.record_dt / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio < 1.0 - 1e-6 {
            return Err(Self::invalid(format!(
                "record_dt = {} must be an integer multiple of dt = {}",
                self.record_dt, self.dt
            )));
        }
        let rows = self.duration / self.record_dt;
        if (rows - rows.round()).abs() > 1e-6 {
            return Err(Self::invalid(format!(
                "duration = {} must be an integer multiple of record_dt = {}",
                self.duration, self.record_dt
            )));
        }

        if self.inverters.is_empty() {
            return Err(Self::invalid("at least one inverter is required".into()));
        }
        for (k, inv) in self.inverters.iter().enumerate() {
            if inv.name.is_empty() || !inv.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Self::invalid(format!(
                    "inverter {k} name {:?} must be non-empty ascii [a-zA-Z0-9_]",
                    inv.name
                )));
            }
            if self.inverters.iter().filter(|o| o.name == inv.name).count() > 1 {
                return Err(Self::invalid(format!("duplicate inverter name {:?}", inv.name)));
            }
            if !(inv.omega_lpf > 0.0) || !inv.omega_lpf.is_finite() {
                return Err(Self::invalid(format!(
                    "inverter {:?} omega_lpf must be positive, got {}",
                    inv.name, inv.omega_lpf
                )));
            }
            if !(inv.epsilon >= 0.0) || !inv.epsilon.is_finite() {
                return Err(Self::invalid(format!(
                    "inverter {:?} epsilon must be non-negative, got {}",
                    inv.name, inv.epsilon
                )));
            }
            if inv.controller != ControllerKind::Shaped && inv.epsilon != 0.0 {
                return Err(Self::invalid(format!(
                    "inverter {:?} has a leakage but is not the shaped controller",
                    inv.name
                )));
            }
        }

        match self.topology {
            Topology::StiffGrid => {
                if self.inverters.len() != 1 {
                    return Err(Self::invalid(format!(
                        "stiff-grid topology takes exactly one inverter, got {}",
                        self.inverters.len()
                    )));
                }
                if self.load != LoadSpec::default() {
                    return Err(Self::invalid(
                        "stiff-grid topology has no bus load; the grid absorbs everything".into(),
                    ));
                }
            }
            Topology::Islanded => {
                let forms = self.inverters.iter().any(|i| {
                    matches!(i.controller, ControllerKind::Shaped | ControllerKind::Droop)
                });
                if !forms {
                    return Err(ScenarioError::Plant(crate::plant::PlantError::NoFormingElement));
                }
            }
        }

        let mut prev_t = 0.0;
        for (k, ev) in self.events.iter().enumerate() {
            if !ev.t.is_finite() || ev.t < 0.0 || ev.t > self.duration {
                return Err(Self::invalid(format!(
                    "event {k} at t = {} is outside [0, {}]",
                    ev.t, self.duration
                )));
            }
            if ev.t < prev_t {
                return Err(Self::invalid(format!(
                    "event {k} at t = {} is out of order (previous at {prev_t})",
                    ev.t
                )));
            }
            prev_t = ev.t;
            match &ev.action {
                EventAction::SetPower { inverter, .. } => {
                    if self.inverter_index(inverter).is_none() {
                        return Err(Self::invalid(format!(
                            "event {k} targets unknown inverter {inverter:?}"
                        )));
                    }
                }
                EventAction::LoadStep { .. } | EventAction::LoadRamp { .. } => {
                    if self.topology == Topology::StiffGrid {
                        return Err(Self::invalid(format!(
                            "event {k}: load events need the islanded topology"
                        )));
                    }
                    if let EventAction::LoadRamp { duration, .. } = ev.action {
                        if !(duration > 0.0) || !duration.is_finite() {
                            return Err(Self::invalid(format!(
                                "event {k} ramp duration must be positive, got {duration}"
                            )));
                        }
                    }
                }
                EventAction::Transition { inverter, eps, .. } => {
                    let Some(idx) = self.inverter_index(inverter) else {
                        return Err(Self::invalid(format!(
                            "event {k} targets unknown inverter {inverter:?}"
                        )));
                    };
                    if self.inverters[idx].controller != ControllerKind::Shaped {
                        return Err(Self::invalid(format!(
                            "event {k}: transitions need the shaped controller on {inverter:?}"
                        )));
                    }
                    if !(*eps >= 0.0) || !eps.is_finite() {
                        return Err(Self::invalid(format!(
                            "event {k} leakage target must be non-negative, got {eps}"
                        )));
                    }
                }
            }
        }

        // The compiled leakage schedules carry their own constraints
        // (ordering, no overlap, positive rates).
        for inv in &self.inverters {
            if inv.controller == ControllerKind::Shaped {
                self.epsilon_schedule(&inv.name).validate()?;
            }
        }
        Ok(())
    }

    /// Leakage schedule of one inverter, compiled from its initial value and
    /// the transition events that target it.
    pub fn epsilon_schedule(&self, inverter: &str) -> TransitionSchedule {
        let segments = self
            .events
            .iter()
            .filter_map(|ev| match &ev.action {
                EventAction::Transition { inverter: name, eps, shape } if name == inverter => {
                    Some(TransitionSegment {
                        start: ev.t,
                        target: *eps,
                        shape: *shape,
                    })
                }
                _ => None,
            })
            .collect();
        let initial = self
            .inverter_index(inverter)
            .map(|k| self.inverters[k].epsilon)
            .unwrap_or(0.0);
        TransitionSchedule { initial, segments }
    }

    /// Bus load at scenario time `t`, accumulating step and ramp events.
    /// During the pre-roll (t < 0) only the base load applies.
    pub fn load_at(&self, t: f64) -> LoadSpec {
        let mut p = self.load.p_w;
        let mut q = self.load.q_var;
        for ev in &self.events {
            match ev.action {
                EventAction::LoadStep { p_w, q_var } => {
                    if t >= ev.t {
                        p += p_w;
                        q += q_var;
                    }
                }
                EventAction::LoadRamp { p_w, q_var, duration } => {
                    let s = ((t - ev.t) / duration).clamp(0.0, 1.0);
                    p += s * p_w;
                    q += s * q_var;
                }
                _ => {}
            }
        }
        LoadSpec::new(p, q)
    }
}
