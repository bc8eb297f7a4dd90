//! Prebuilt studies: the scenarios the library exists to compare, plus the
//! reduced numbers each comparison turns on.
//!
//! Three study families:
//!
//! * power tracking on a stiff grid, stepping both power setpoints through
//!   a fixed sequence;
//! * islanded load disturbances, fast step and slow ramp, measuring how a
//!   follower's frequency shaping softens the frequency excursion;
//! * mode transitions, leaking the follower's integrator up to droop
//!   behavior and back, smooth ramp against sudden jump.

use super::engine::run_scenario;
use super::metrics::{compute_overshoot, compute_rocof};
use super::spec::{ControllerKind, EventAction, InverterSpec, Scenario, ScenarioEvent, Topology};
use super::trace::Trace;
use super::ScenarioError;
use crate::control::SegmentShape;
use crate::plant::{LoadSpec, PlantParams};

const PI: f64 = std::f64::consts::PI;

/// Measurement bandwidths swept by the comparison studies, rad/s.
pub const WLPF_SWEEP: [f64; 3] = [4.0 * PI, 10.0 * PI, 20.0 * PI];

/// Name of the droop unit that defines the island bus in every islanded
/// study, and of the unit under test.
pub const GFM_NAME: &str = "gfm";
pub const GFL_NAME: &str = "gfl";

/// Follower setpoints shared by the islanded studies.
const GFL_P0: f64 = 10e3;
const GFL_Q0: f64 = 0.0;

fn wlpf_label(omega_lpf: Option<f64>) -> String {
    match omega_lpf {
        None => "conventional".into(),
        Some(w) => {
            let mult = w / PI;
            if (mult - mult.round()).abs() < 1e-9 {
                format!("shaped_{:.0}pi", mult)
            } else {
                format!("shaped_{:.2}pi", mult)
            }
        }
    }
}

fn gfm_spec() -> InverterSpec {
    InverterSpec {
        name: GFM_NAME.into(),
        controller: ControllerKind::Droop,
        omega_lpf: 20.0 * PI,
        p_set: 10e3,
        q_set: 10e3,
        epsilon: 0.0,
        damp_g: None,
    }
}

fn gfl_spec(omega_lpf: Option<f64>) -> InverterSpec {
    InverterSpec {
        name: GFL_NAME.into(),
        controller: match omega_lpf {
            None => ControllerKind::Following,
            Some(_) => ControllerKind::Shaped,
        },
        omega_lpf: omega_lpf.unwrap_or(20.0 * PI),
        p_set: GFL_P0,
        q_set: GFL_Q0,
        epsilon: 0.0,
        damp_g: None,
    }
}

fn set_power(t: f64, p_w: Option<f64>, q_var: Option<f64>) -> ScenarioEvent {
    ScenarioEvent {
        t,
        action: EventAction::SetPower {
            inverter: GFL_NAME.into(),
            p_w,
            q_var,
        },
    }
}

/// Stiff-grid setpoint sequence: P and Q step one at a time, both
/// directions, and the unit must resettle before each next move.
///
/// `None` builds the conventional follower, `Some(w)` the shaped one with
/// zero leakage and measurement bandwidth `w`.
pub fn power_tracking_scenario(omega_lpf: Option<f64>) -> Scenario {
    Scenario {
        name: format!("power_tracking_{}", wlpf_label(omega_lpf)),
        topology: Topology::StiffGrid,
        duration: 13.0,
        dt: 5e-5,
        record_dt: 5e-4,
        pre_roll: 5.0,
        plant: PlantParams::default(),
        load: LoadSpec::default(),
        inverters: vec![gfl_spec(omega_lpf)],
        events: vec![
            set_power(1.0, Some(12e3), None),
            set_power(4.0, None, Some(2e3)),
            set_power(7.0, Some(8e3), None),
            set_power(10.0, None, Some(-1e3)),
        ],
    }
}

/// The setpoints in force over one inter-event segment and how far the
/// unit still was from them just before the segment ended.
#[derive(Debug, Clone, Copy)]
pub struct SegmentCheck {
    pub t_start: f64,
    pub t_end: f64,
    pub p_set: f64,
    pub q_set: f64,
    /// Max deviations over the last quarter second of the segment.
    pub p_dev_w: f64,
    pub q_dev_var: f64,
}

impl SegmentCheck {
    /// One percent of the setpoint with a 50-unit floor for zero targets.
    pub fn tol_p(&self) -> f64 {
        (0.01 * self.p_set.abs()).max(50.0)
    }

    pub fn tol_q(&self) -> f64 {
        (0.01 * self.q_set.abs()).max(50.0)
    }

    pub fn pass(&self) -> bool {
        self.p_dev_w <= self.tol_p() && self.q_dev_var <= self.tol_q()
    }
}

pub struct TrackingRun {
    pub label: String,
    pub omega_lpf: Option<f64>,
    pub trace: Trace,
    pub segments: Vec<SegmentCheck>,
    pub wall_seconds: f64,
}

impl TrackingRun {
    pub fn all_pass(&self) -> bool {
        self.segments.iter().all(SegmentCheck::pass)
    }
}

pub struct PowerTrackingStudy {
    pub runs: Vec<TrackingRun>,
}

fn tracking_run(omega_lpf: Option<f64>) -> Result<TrackingRun, ScenarioError> {
    let sc = power_tracking_scenario(omega_lpf);
    let started = std::time::Instant::now();
    let trace = run_scenario(&sc)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    // Setpoints in force before each event boundary, ending at duration.
    let plan = [
        (0.0, 1.0, 10e3, 0.0),
        (1.0, 4.0, 12e3, 0.0),
        (4.0, 7.0, 12e3, 2e3),
        (7.0, 10.0, 8e3, 2e3),
        (10.0, 13.0, 8e3, -1e3),
    ];
    let segments = plan
        .iter()
        .map(|&(t_start, t_end, p_set, q_set)| {
            let w0 = t_end - 0.25;
            let w1 = t_end + sc.record_dt;
            SegmentCheck {
                t_start,
                t_end,
                p_set,
                q_set,
                p_dev_w: trace.window_max_dev(&format!("{GFL_NAME}_p_w"), p_set, w0, w1),
                q_dev_var: trace.window_max_dev(&format!("{GFL_NAME}_q_var"), q_set, w0, w1),
            }
        })
        .collect();

    Ok(TrackingRun {
        label: wlpf_label(omega_lpf),
        omega_lpf,
        trace,
        segments,
        wall_seconds,
    })
}

/// Run the tracking sequence for each shaped bandwidth, in parallel.
pub fn run_power_tracking(wlpfs: &[f64]) -> Result<PowerTrackingStudy, ScenarioError> {
    let mut runs = Vec::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = wlpfs
            .iter()
            .map(|&w| s.spawn(move || tracking_run(Some(w))))
            .collect();
        for h in handles {
            runs.push(h.join().expect("tracking worker panicked"));
        }
    });
    Ok(PowerTrackingStudy {
        runs: runs.into_iter().collect::<Result<_, _>>()?,
    })
}

/// Islanded pair, droop former plus the follower under test, hit by an
/// instant 5 kW / 5 kvar load step at t = 1.
pub fn fast_load_step_scenario(omega_lpf: Option<f64>) -> Scenario {
    Scenario {
        name: format!("fast_load_step_{}", wlpf_label(omega_lpf)),
        topology: Topology::Islanded,
        duration: 8.0,
        dt: 5e-5,
        record_dt: 5e-4,
        pre_roll: 5.0,
        plant: PlantParams::default(),
        load: LoadSpec::new(20e3, 10e3),
        inverters: vec![gfm_spec(), gfl_spec(omega_lpf)],
        events: vec![ScenarioEvent {
            t: 1.0,
            action: EventAction::LoadStep {
                p_w: 5e3,
                q_var: 5e3,
            },
        }],
    }
}

/// One islanded disturbance run reduced to its frequency excursion and the
/// follower's recovery quality.
pub struct RocofRun {
    pub label: String,
    pub omega_lpf: Option<f64>,
    /// Max |df/dt| of the island frequency, Hz/s.
    pub rocof_hz_s: f64,
    /// Follower deviations from its setpoints over the last half second.
    pub recovery_p_dev_w: f64,
    pub recovery_q_dev_var: f64,
    pub trace: Trace,
}

fn rocof_run(omega_lpf: Option<f64>) -> Result<RocofRun, ScenarioError> {
    let sc = fast_load_step_scenario(omega_lpf);
    let trace = run_scenario(&sc)?;
    let rocof_hz_s = compute_rocof(&trace, &format!("{GFM_NAME}_omega"))?;
    let t1 = sc.duration + sc.record_dt;
    let recovery_p_dev_w =
        trace.window_max_dev(&format!("{GFL_NAME}_p_w"), GFL_P0, sc.duration - 0.5, t1);
    let recovery_q_dev_var =
        trace.window_max_dev(&format!("{GFL_NAME}_q_var"), GFL_Q0, sc.duration - 0.5, t1);
    Ok(RocofRun {
        label: wlpf_label(omega_lpf),
        omega_lpf,
        rocof_hz_s,
        recovery_p_dev_w,
        recovery_q_dev_var,
        trace,
    })
}

pub struct FastLoadStepStudy {
    pub conventional: RocofRun,
    pub shaped: Vec<RocofRun>,
}

impl FastLoadStepStudy {
    /// Shaped-to-conventional frequency excursion ratios, sweep order.
    pub fn ratios(&self) -> Vec<f64> {
        self.shaped
            .iter()
            .map(|r| r.rocof_hz_s / self.conventional.rocof_hz_s)
            .collect()
    }
}

/// Fast load step with the conventional follower and with each shaped
/// bandwidth in [`WLPF_SWEEP`], all in parallel.
pub fn run_fast_load_step() -> Result<FastLoadStepStudy, ScenarioError> {
    let mut results = Vec::new();
    std::thread::scope(|s| {
        let mut handles = vec![s.spawn(|| rocof_run(None))];
        handles.extend(
            WLPF_SWEEP
                .iter()
                .map(|&w| s.spawn(move || rocof_run(Some(w)))),
        );
        for h in handles {
            results.push(h.join().expect("load-step worker panicked"));
        }
    });
    let mut results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let conventional = results.remove(0);
    Ok(FastLoadStepStudy {
        conventional,
        shaped: results,
    })
}

/// Same island, but the extra 5 kW / 5 kvar arrives as a 5-second ramp.
pub fn slow_load_ramp_scenario() -> Scenario {
    let mut sc = fast_load_step_scenario(Some(20.0 * PI));
    sc.name = "slow_load_ramp".into();
    sc.duration = 9.0;
    sc.events = vec![ScenarioEvent {
        t: 1.0,
        action: EventAction::LoadRamp {
            p_w: 5e3,
            q_var: 5e3,
            duration: 5.0,
        },
    }];
    sc
}

pub struct SlowRampStudy {
    pub trace: Trace,
    /// Follower's worst departure from its setpoint while the ramp runs.
    pub gfl_dev_during_ramp_w: f64,
    /// Former's settled pickup, end of trace against before the ramp.
    pub gfm_rise_w: f64,
    /// Follower's worst departure after the ramp ends.
    pub gfl_tail_dev_w: f64,
    pub max_imbalance_rel: f64,
}

/// A slow ramp should be absorbed almost entirely by the forming unit
/// while the follower holds its dispatch.
pub fn run_slow_load_ramp() -> Result<SlowRampStudy, ScenarioError> {
    let sc = slow_load_ramp_scenario();
    let trace = run_scenario(&sc)?;
    let p_col = format!("{GFL_NAME}_p_w");
    let gfm_col = format!("{GFM_NAME}_p_w");
    let t1 = sc.duration + sc.record_dt;
    let study = SlowRampStudy {
        gfl_dev_during_ramp_w: trace.window_max_dev(&p_col, GFL_P0, 1.0, 6.0),
        gfm_rise_w: trace.window_mean(&gfm_col, 8.5, t1) - trace.window_mean(&gfm_col, 0.5, 1.0),
        gfl_tail_dev_w: trace.window_max_dev(&p_col, GFL_P0, 6.5, t1),
        max_imbalance_rel: trace.max_power_imbalance,
        trace,
    };
    Ok(study)
}

/// Mode-transition island: heavier load than the units' dispatch, so the
/// follower's integrator carries a standing frequency correction whose
/// release is what distinguishes smooth from sudden.
///
/// The follower leaks up to droop behavior at t = 2 (ramp or jump) and
/// jumps back to pure following at t = 7.
pub fn transition_scenario(smooth: bool) -> Scenario {
    let shape = if smooth {
        SegmentShape::Ramp { rate: 100.0 }
    } else {
        SegmentShape::Jump
    };
    Scenario {
        name: format!(
            "transition_{}",
            if smooth { "smooth" } else { "sudden" }
        ),
        topology: Topology::Islanded,
        duration: 12.0,
        dt: 5e-5,
        record_dt: 5e-4,
        pre_roll: 5.0,
        plant: PlantParams::default(),
        load: LoadSpec::new(25e3, 15e3),
        inverters: vec![gfm_spec(), gfl_spec(Some(20.0 * PI))],
        events: vec![
            ScenarioEvent {
                t: 2.0,
                action: EventAction::Transition {
                    inverter: GFL_NAME.into(),
                    eps: 200.0,
                    shape,
                },
            },
            ScenarioEvent {
                t: 7.0,
                action: EventAction::Transition {
                    inverter: GFL_NAME.into(),
                    eps: 0.0,
                    shape: SegmentShape::Jump,
                },
            },
        ],
    }
}

pub struct TransitionOutcome {
    pub trace: Trace,
    /// Excursions beyond the settled corridor while leaking up to droop.
    pub p_overshoot_w: f64,
    pub q_overshoot_var: f64,
    /// Worst transient on the way back to pure following.
    pub return_p_dev_w: f64,
}

pub struct TransitionStudy {
    pub smooth: TransitionOutcome,
    pub sudden: TransitionOutcome,
}

impl TransitionStudy {
    pub fn p_ratio(&self) -> f64 {
        self.smooth.p_overshoot_w / self.sudden.p_overshoot_w
    }
}

fn transition_outcome(smooth: bool) -> Result<TransitionOutcome, ScenarioError> {
    let sc = transition_scenario(smooth);
    let trace = run_scenario(&sc)?;
    let t = trace.time();
    let p_col = format!("{GFL_NAME}_p_w");
    let q_col = format!("{GFL_NAME}_q_var");
    let p = trace
        .column(&p_col)
        .ok_or_else(|| ScenarioError::MissingColumn(p_col.clone()))?;
    let q = trace
        .column(&q_col)
        .ok_or_else(|| ScenarioError::MissingColumn(q_col.clone()))?;

    // Leg 1, leak-up at t = 2, settled by 7; leg 2, jump back at t = 7.
    let p_up = compute_overshoot(t, p, &p_col, 2.0, 7.0, 200.0)?;
    let q_up = compute_overshoot(t, q, &q_col, 2.0, 7.0, 200.0)?;
    let p_back = compute_overshoot(t, p, &p_col, 7.0, 12.0, 200.0)?;
    Ok(TransitionOutcome {
        trace,
        p_overshoot_w: p_up.peak,
        q_overshoot_var: q_up.peak,
        return_p_dev_w: p_back.peak,
    })
}

/// Smooth-versus-sudden mode transition comparison.
pub fn run_transition() -> Result<TransitionStudy, ScenarioError> {
    let mut results = Vec::new();
    std::thread::scope(|s| {
        let handles = vec![
            s.spawn(|| transition_outcome(true)),
            s.spawn(|| transition_outcome(false)),
        ];
        for h in handles {
            results.push(h.join().expect("transition worker panicked"));
        }
    });
    let mut results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let sudden = results.pop().unwrap();
    let smooth = results.pop().unwrap();
    Ok(TransitionStudy { smooth, sudden })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shaped_tracking_settles_every_segment() {
        let study = run_power_tracking(&WLPF_SWEEP).unwrap();
        assert_eq!(study.runs.len(), 3);
        for run in &study.runs {
            assert!(
                run.wall_seconds < 30.0,
                "{}: took {:.1} s",
                run.label,
                run.wall_seconds
            );
            assert_eq!(run.trace.saturated_samples, 0, "{} saturated", run.label);
            for seg in &run.segments {
                assert!(
                    seg.pass(),
                    "{}: segment ending {} missed: p dev {:.1} W (tol {:.1}), q dev {:.1} var (tol {:.1})",
                    run.label,
                    seg.t_end,
                    seg.p_dev_w,
                    seg.tol_p(),
                    seg.q_dev_var,
                    seg.tol_q()
                );
            }
        }
    }

    #[test]
    fn frequency_shaping_softens_the_load_step() {
        let study = run_fast_load_step().unwrap();
        let ratios = study.ratios();
        for (run, r) in study.shaped.iter().zip(&ratios) {
            assert!(
                (0.35..=0.70).contains(r),
                "{}: rocof ratio {:.3} outside [0.35, 0.70] ({:.3} vs {:.3} Hz/s)",
                run.label,
                r,
                run.rocof_hz_s,
                study.conventional.rocof_hz_s
            );
            assert!(
                run.recovery_p_dev_w <= 0.01 * GFL_P0,
                "{}: p recovery dev {:.1} W",
                run.label,
                run.recovery_p_dev_w
            );
            assert!(
                run.recovery_q_dev_var <= 100.0,
                "{}: q recovery dev {:.1} var",
                run.label,
                run.recovery_q_dev_var
            );
        }
        // Slower measurement filters hold the support longer, so the
        // excursion grows with bandwidth and all stay below conventional.
        assert!(ratios[0] <= ratios[1] && ratios[1] <= ratios[2], "{ratios:?}");
        assert!(ratios[2] < 1.0, "{ratios:?}");
    }

    #[test]
    fn slow_ramp_lands_on_the_forming_unit() {
        let study = run_slow_load_ramp().unwrap();
        assert!(
            study.gfl_dev_during_ramp_w <= 0.05 * GFL_P0,
            "follower moved {:.1} W during the ramp",
            study.gfl_dev_during_ramp_w
        );
        assert!(
            (study.gfm_rise_w - 5e3).abs() <= 0.10 * 5e3,
            "former picked up {:.1} W",
            study.gfm_rise_w
        );
        assert!(
            study.gfl_tail_dev_w <= 200.0,
            "follower tail dev {:.1} W",
            study.gfl_tail_dev_w
        );
        assert!(
            study.max_imbalance_rel < 0.01,
            "imbalance {:.2e}",
            study.max_imbalance_rel
        );
    }

    #[test]
    fn smooth_transition_removes_the_handover_shock() {
        let study = run_transition().unwrap();
        assert!(
            study.sudden.p_overshoot_w > 1e3,
            "sudden overshoot only {:.1} W; the contrast case is gone",
            study.sudden.p_overshoot_w
        );
        assert!(
            study.p_ratio() <= 0.05,
            "smooth/sudden overshoot ratio {:.4} ({:.1} W vs {:.1} W)",
            study.p_ratio(),
            study.smooth.p_overshoot_w,
            study.sudden.p_overshoot_w
        );
        assert!(
            study.smooth.q_overshoot_var < 50.0,
            "smooth q overshoot {:.1} var",
            study.smooth.q_overshoot_var
        );
        let cap = 0.10 * study.sudden.p_overshoot_w;
        assert!(
            study.smooth.return_p_dev_w < cap && study.sudden.return_p_dev_w < cap,
            "return transients {:.1} / {:.1} W vs cap {:.1} W",
            study.smooth.return_p_dev_w,
            study.sudden.return_p_dev_w,
            cap
        );
    }
}
