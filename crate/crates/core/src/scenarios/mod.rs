//! Scripted simulation studies and their measurement tools.
//!
//! A [`Scenario`] declares one experiment: topology, plant, inverters, and a
//! timed event list. [`run_scenario`] integrates it with a fixed-step RK4
//! between controller samples and returns a [`Trace`], a uniformly sampled
//! table of the plotted quantities. Metric extractors ([`compute_rocof`],
//! [`compute_overshoot`], [`settling_time`]) reduce traces to the numbers
//! the studies compare, and `run_*` functions in this module package the
//! four built-in experiments: stiff-grid power tracking, fast load step,
//! slow load ramp, and the smooth-versus-sudden mode transition.

mod engine;
mod metrics;
mod spec;
mod studies;
mod trace;

pub use engine::run_scenario;
pub use metrics::{
    compute_overshoot, compute_rocof, lowpass, settling_time, summarize, Metrics, Overshoot,
    ROCOF_FILTER_RAD_S,
};
pub use spec::{ControllerKind, EventAction, InverterSpec, Scenario, ScenarioEvent, Topology};
pub use studies::{
    fast_load_step_scenario, power_tracking_scenario, run_fast_load_step, run_power_tracking,
    run_slow_load_ramp, run_transition, slow_load_ramp_scenario, transition_scenario,
    FastLoadStepStudy, PowerTrackingStudy, RocofRun, SegmentCheck, SlowRampStudy, TrackingRun,
    TransitionOutcome, TransitionStudy, GFL_NAME, GFM_NAME, WLPF_SWEEP,
};
pub use trace::Trace;

use crate::control::ControlError;
use crate::plant::PlantError;

/// Errors from scenario validation, simulation, and metric extraction.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario failed: {signal} diverged to {value:.3e} at t = {t:.4} s")]
    Diverged { signal: String, value: f64, t: f64 },
    #[error("trace too short: the metric needs {needed} samples, trace has {have}")]
    TraceTooShort { needed: usize, have: usize },
    #[error("{channel} reached no steady value by t = {t_end} s")]
    SettlingFailure { channel: String, t_end: f64 },
    #[error("trace has no column named {0}")]
    MissingColumn(String),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}
