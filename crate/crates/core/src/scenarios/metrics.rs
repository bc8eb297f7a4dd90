//! Metric extractors reducing traces to comparable numbers.

use super::spec::{ControllerKind, EventAction, Scenario, Topology};
use super::trace::Trace;
use super::ScenarioError;

/// Corner of the low-pass filter applied to the frequency series before the
/// rate-of-change measurement: 10 Hz, the conservative standard choice.
pub const ROCOF_FILTER_RAD_S: f64 = 2.0 * std::f64::consts::PI * 10.0;

/// First-order low pass with corner `cutoff` rad/s, initialized at the first
/// sample. The discrete pole is exact for a zero-order-held input.
pub fn lowpass(u: &[f64], dt: f64, cutoff: f64) -> Vec<f64> {
    assert!(dt > 0.0 && cutoff > 0.0);
    let alpha = 1.0 - (-cutoff * dt).exp();
    let mut y = Vec::with_capacity(u.len());
    let mut state = *u.first().unwrap_or(&0.0);
    for &v in u {
        state += alpha * (v - state);
        y.push(state);
    }
    y
}

/// Maximum |df/dt| in Hz/s of the angular-frequency column `omega_col`,
/// measured as a centered difference of the 10 Hz low-pass-filtered
/// frequency series.
pub fn compute_rocof(trace: &Trace, omega_col: &str) -> Result<f64, ScenarioError> {
    let omega = trace
        .column(omega_col)
        .ok_or_else(|| ScenarioError::MissingColumn(omega_col.into()))?;
    rocof_series(omega, trace.record_dt())
}

fn rocof_series(omega: &[f64], dt: f64) -> Result<f64, ScenarioError> {
    // Warm-up: the filter state is trustworthy only a few time constants in.
    let needed = (3.0 / (ROCOF_FILTER_RAD_S * dt)).ceil() as usize + 2;
    if omega.len() < needed.max(3) {
        return Err(ScenarioError::TraceTooShort {
            needed: needed.max(3),
            have: omega.len(),
        });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let f: Vec<f64> = omega.iter().map(|w| w / two_pi).collect();
    let filtered = lowpass(&f, dt, ROCOF_FILTER_RAD_S);
    let mut worst = 0.0f64;
    for k in 1..filtered.len() - 1 {
        worst = worst.max(((filtered[k + 1] - filtered[k - 1]) / (2.0 * dt)).abs());
    }
    Ok(worst)
}

/// Peak excursion of a signal around one event window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overshoot {
    /// Settled value just before the window (or the first in-window sample
    /// when nothing precedes it).
    pub initial: f64,
    /// Settled value at the end of the window.
    pub final_value: f64,
    /// Peak deviation beyond the corridor spanned by `initial` and
    /// `final_value`; zero for a monotone move between the two.
    pub peak: f64,
}

/// Measure the overshoot of `y` over the window [start, end).
///
/// The settled pre-event and post-event values span a corridor
/// [min(initial, final), max(initial, final)]; the overshoot is the largest
/// excursion outside it, so a commanded migration between two operating
/// points does not count, only the transient beyond them. The tail of the
/// window must hold still within `steady_tol` or the measurement is
/// meaningless and an error is returned.
pub fn compute_overshoot(
    t: &[f64],
    y: &[f64],
    channel: &str,
    start: f64,
    end: f64,
    steady_tol: f64,
) -> Result<Overshoot, ScenarioError> {
    assert_eq!(t.len(), y.len());
    assert!(end > start && steady_tol > 0.0);
    let in_window: Vec<usize> = (0..t.len()).filter(|&k| t[k] >= start && t[k] < end).collect();
    if in_window.len() < 8 {
        return Err(ScenarioError::TraceTooShort {
            needed: 8,
            have: in_window.len(),
        });
    }

    // Settled tail: the last tenth of the window.
    let tail_start = end - 0.1 * (end - start);
    let tail: Vec<usize> = in_window.iter().copied().filter(|&k| t[k] >= tail_start).collect();
    let final_value = tail.iter().map(|&k| y[k]).sum::<f64>() / tail.len() as f64;
    let tail_dev = tail
        .iter()
        .map(|&k| (y[k] - final_value).abs())
        .fold(0.0f64, f64::max);
    if tail_dev > steady_tol {
        return Err(ScenarioError::SettlingFailure {
            channel: channel.into(),
            t_end: end,
        });
    }

    // Settled head: a short window just before the event, when one exists.
    let pre_span = (0.1 * (end - start)).min(0.5);
    let pre: Vec<usize> = (0..t.len())
        .filter(|&k| t[k] >= start - pre_span && t[k] < start)
        .collect();
    let initial = if pre.is_empty() {
        y[in_window[0]]
    } else {
        pre.iter().map(|&k| y[k]).sum::<f64>() / pre.len() as f64
    };

    let lo = initial.min(final_value);
    let hi = initial.max(final_value);
    let mut peak = 0.0f64;
    for &k in &in_window {
        peak = peak.max(lo - y[k]).max(y[k] - hi);
    }
    Ok(Overshoot {
        initial,
        final_value,
        peak,
    })
}

/// First sample time at or after `start` from which `y` stays within `tol`
/// of `target` for the rest of the trace. `None` when it never locks in.
pub fn settling_time(t: &[f64], y: &[f64], start: f64, target: f64, tol: f64) -> Option<f64> {
    assert_eq!(t.len(), y.len());
    let mut settled_from: Option<f64> = None;
    for k in 0..t.len() {
        if t[k] < start {
            continue;
        }
        if (y[k] - target).abs() <= tol {
            if settled_from.is_none() {
                settled_from = Some(t[k]);
            }
        } else {
            settled_from = None;
        }
    }
    settled_from.map(|ts| ts - start)
}

/// Reduced report of one run, focused on a single inverter.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub scenario: String,
    pub focus: String,
    /// Max |df/dt| of the grid-defining unit, islanded runs only.
    pub rocof_max_hz_s: Option<f64>,
    /// Overshoot of the focus inverter's powers around the last event.
    pub overshoot_p_w: Option<f64>,
    pub overshoot_q_var: Option<f64>,
    /// Relative steady-state error against the final setpoints.
    pub steady_state_error_p: f64,
    pub steady_state_error_q: f64,
    /// Time from the last event until the active power locks into its
    /// tolerance band for good.
    pub settling_time_s: Option<f64>,
    pub saturated_samples: usize,
    pub max_power_imbalance: f64,
}

impl Metrics {
    pub fn report(&self) -> String {
        let fmt = |v: Option<f64>, unit: &str| match v {
            Some(x) => format!("{x:.4} {unit}"),
            None => "n/a".into(),
        };
        let saturation = if self.saturated_samples == 0 {
            "clean".into()
        } else {
            format!(
                "WARNING: modulation saturated on {} samples; scenario invalid",
                self.saturated_samples
            )
        };
        format!(
            "scenario: {}\nfocus inverter: {}\nrocof_max: {}\novershoot_p: {}\novershoot_q: {}\nsteady_state_error_p: {:.6}\nsteady_state_error_q: {:.6}\nsettling_time: {}\nmax_power_imbalance: {:.6}\nsaturation: {}\n",
            self.scenario,
            self.focus,
            fmt(self.rocof_max_hz_s, "Hz/s"),
            fmt(self.overshoot_p_w, "W"),
            fmt(self.overshoot_q_var, "VAR"),
            self.steady_state_error_p,
            self.steady_state_error_q,
            fmt(self.settling_time_s, "s"),
            self.max_power_imbalance,
            saturation,
        )
    }
}

/// Power tolerance used for settling bands: 1% of the setpoint with a 50 W
/// floor so zero setpoints keep a meaningful band.
pub(crate) fn power_tolerance(setpoint: f64) -> f64 {
    (0.01 * setpoint.abs()).max(50.0)
}

/// Reduce a finished run to a [`Metrics`] report focused on `focus`.
///
/// RoCoF comes from the grid-defining unit: the first droop inverter, or
/// the first shaped one when no pure droop exists; stiff-grid runs have no
/// grid-defining unit and report none. Overshoot and settling wrap the last
/// event; traces that never settle leave those fields empty.
pub fn summarize(sc: &Scenario, trace: &Trace, focus: &str) -> Result<Metrics, ScenarioError> {
    if sc.inverters.iter().all(|i| i.name != focus) {
        return Err(ScenarioError::InvalidScenario(format!(
            "focus inverter {focus:?} is not in the scenario"
        )));
    }

    let rocof_max_hz_s = if sc.topology == Topology::Islanded {
        let former = sc
            .inverters
            .iter()
            .find(|i| i.controller == ControllerKind::Droop)
            .or_else(|| sc.inverters.iter().find(|i| i.controller == ControllerKind::Shaped));
        match former {
            Some(inv) => Some(compute_rocof(trace, &format!("{}_omega", inv.name))?),
            None => None,
        }
    } else {
        None
    };

    // Final setpoints of the focus inverter after every event has fired.
    let spec = sc.inverters.iter().find(|i| i.name == focus).unwrap();
    let (mut p_set, mut q_set) = (spec.p_set, spec.q_set);
    for ev in &sc.events {
        if let EventAction::SetPower { inverter, p_w, q_var } = &ev.action {
            if inverter == focus {
                if let Some(p) = p_w {
                    p_set = *p;
                }
                if let Some(q) = q_var {
                    q_set = *q;
                }
            }
        }
    }

    let t = trace.time();
    let t_end = *t.last().expect("non-empty trace");
    let last_event = sc.events.last().map(|e| e.t).unwrap_or(0.0);
    let p_col = format!("{focus}_p_w");
    let q_col = format!("{focus}_q_var");
    let p = trace
        .column(&p_col)
        .ok_or_else(|| ScenarioError::MissingColumn(p_col.clone()))?;
    let q = trace
        .column(&q_col)
        .ok_or_else(|| ScenarioError::MissingColumn(q_col.clone()))?;

    let tail_start = t_end - 0.1 * (t_end - last_event);
    let p_final = trace.window_mean(&p_col, tail_start, t_end + 1.0);
    let q_final = trace.window_mean(&q_col, tail_start, t_end + 1.0);
    let steady_state_error_p = (p_final - p_set).abs() / power_tolerance(p_set).max(p_set.abs());
    let steady_state_error_q = (q_final - q_set).abs() / power_tolerance(q_set).max(q_set.abs());

    let keep_or_drop = |r: Result<Overshoot, ScenarioError>| match r {
        Ok(o) => Ok(Some(o.peak)),
        Err(ScenarioError::SettlingFailure { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let overshoot_p_w = keep_or_drop(compute_overshoot(
        t,
        p,
        &p_col,
        last_event,
        t_end,
        power_tolerance(p_set),
    ))?;
    let overshoot_q_var = keep_or_drop(compute_overshoot(
        t,
        q,
        &q_col,
        last_event,
        t_end,
        power_tolerance(q_set),
    ))?;

    let settling_time_s = settling_time(t, p, last_event, p_set, power_tolerance(p_set));

    Ok(Metrics {
        scenario: sc.name.clone(),
        focus: focus.into(),
        rocof_max_hz_s,
        overshoot_p_w,
        overshoot_q_var,
        steady_state_error_p,
        steady_state_error_q,
        settling_time_s,
        saturated_samples: trace.saturated_samples,
        max_power_imbalance: trace.max_power_imbalance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn omega_trace(omega: Vec<f64>, dt: f64) -> Trace {
        let mut tr = Trace::new(vec!["t".into(), "gfm_omega".into()], dt);
        for (k, w) in omega.iter().enumerate() {
            tr.push_row(&[k as f64 * dt, *w]);
        }
        tr
    }

    #[test]
    fn lowpass_preserves_a_constant() {
        let y = lowpass(&[3.5; 100], 1e-3, 100.0);
        assert!(y.iter().all(|v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn rocof_of_constant_frequency_is_zero() {
        let tr = omega_trace(vec![TWO_PI * 60.0; 500], 5e-4);
        assert_eq!(compute_rocof(&tr, "gfm_omega").unwrap(), 0.0);
    }

    #[test]
    fn rocof_of_a_linear_ramp_is_its_slope() {
        // omega(t) = w0 + 2*pi*a*t gives df/dt = a after the filter settles.
        let a = 2.0;
        let dt = 5e-4;
        let n = 2000;
        let omega: Vec<f64> = (0..n)
            .map(|k| TWO_PI * 60.0 + TWO_PI * a * (k as f64 * dt))
            .collect();
        let rocof = compute_rocof(&omega_trace(omega, dt), "gfm_omega").unwrap();
        assert!((rocof - a).abs() < 1e-6 * a, "rocof = {rocof}");
    }

    #[test]
    fn rocof_needs_a_warmed_up_filter() {
        let tr = omega_trace(vec![377.0; 10], 5e-4);
        assert!(matches!(
            compute_rocof(&tr, "gfm_omega"),
            Err(ScenarioError::TraceTooShort { .. })
        ));
        assert!(matches!(
            compute_rocof(&omega_trace(vec![377.0; 500], 5e-4), "nope"),
            Err(ScenarioError::MissingColumn(_))
        ));
    }

    #[test]
    fn first_order_step_has_no_overshoot() {
        let dt = 1e-3;
        let n = 10_000;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 - (-t).exp()).collect();
        let ov = compute_overshoot(&t, &y, "y", 0.0, 9.9, 1e-3).unwrap();
        assert_eq!(ov.peak, 0.0);
        assert!((ov.final_value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn half_damped_second_order_overshoot_matches_the_closed_form() {
        // zeta = 0.5: peak overshoot exp(-pi*zeta/sqrt(1-zeta^2)) = 0.1630196.
        let zeta = 0.5f64;
        let wn = TWO_PI;
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let dt = 1e-3;
        let n = 30_000;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|t| {
                1.0 - (-zeta * wn * t).exp()
                    * ((wd * t).cos() + zeta / (1.0 - zeta * zeta).sqrt() * (wd * t).sin())
            })
            .collect();
        let ov = compute_overshoot(&t, &y, "y", 0.0, 29.9, 1e-6).unwrap();
        let expected = (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert!((ov.peak - expected).abs() < 1e-4, "peak = {}", ov.peak);
    }

    #[test]
    fn flat_trace_has_zero_overshoot() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let y = vec![7.0; 100];
        let ov = compute_overshoot(&t, &y, "y", 0.2, 0.99, 1e-9).unwrap();
        assert_eq!(ov.peak, 0.0);
        assert_eq!(ov.initial, 7.0);
        assert_eq!(ov.final_value, 7.0);
    }

    #[test]
    fn migration_between_operating_points_is_not_overshoot() {
        // Smooth first-order move 0 -> 1 plus a 0.3 spike past the target.
        let dt = 1e-3;
        let n = 12_000;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| {
                let base = if t < 1.0 { 0.0 } else { 1.0 - (-(t - 1.0) / 0.5).exp() };
                let spike = if (3.0..3.2).contains(&t) { 0.3 } else { 0.0 };
                base + spike
            })
            .collect();
        let ov = compute_overshoot(&t, &y, "y", 1.0, 11.9, 1e-3).unwrap();
        assert!((ov.peak - 0.3).abs() < 2e-2, "peak = {}", ov.peak);
        assert!(ov.initial.abs() < 1e-9);
    }

    #[test]
    fn unsettled_tail_is_an_error() {
        let dt = 1e-3;
        let n = 5000;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|t| t * 2.0).collect();
        assert!(matches!(
            compute_overshoot(&t, &y, "y", 0.0, 4.9, 1e-3),
            Err(ScenarioError::SettlingFailure { .. })
        ));
    }

    #[test]
    fn settling_time_of_an_exponential() {
        let dt = 1e-3;
        let t: Vec<f64> = (0..6000).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let ts = settling_time(&t, &y, 0.0, 0.0, 0.05).unwrap();
        assert!((ts - 20.0f64.ln()).abs() < 2.0 * dt, "ts = {ts}");
        // A series that keeps escaping the band never settles.
        let y2: Vec<f64> = t.iter().map(|t| t.sin()).collect();
        assert!(settling_time(&t, &y2, 0.0, 0.0, 0.05).is_none());
    }
}
