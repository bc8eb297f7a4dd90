//! Closed-loop time-domain engine.
//!
//! Controllers sample once per `dt` and hold their command over the step
//! (zero-order hold); the plant is integrated with classic RK4 inside each
//! hold interval. Two network shapes exist:
//!
//! * stiff grid: one inverter, full 7-state model, bus voltage pinned;
//! * islanded: the line branches are quasi-static admittances at nominal
//!   frequency, so each inverter keeps 5 dynamic states and the line
//!   currents come from the algebraic bus solve at every stage.

use super::spec::{ControllerKind, EventAction, InverterSpec, Scenario, Topology};
use super::trace::Trace;
use super::ScenarioError;
use crate::control::{
    ControlCommand, FollowingConfig, FollowingControl, FormingConfig, FormingControl,
    FormingKind, LocalMeasurements,
};
use crate::numerics::Complex;
use crate::plant::{
    inverter_derivatives, power_from_dq, solve_pcc, DqPair, InverterState, PlantParams,
};

/// Any state beyond this magnitude is treated as numerical blow-up; the
/// physical scales here are a few hundred volts and tens of amperes.
const DIVERGENCE_BOUND: f64 = 1e7;

const STIFF_DIM: usize = 7;
const ISLAND_DIM: usize = 5;
const STIFF_COMPONENTS: [&str; STIFF_DIM] =
    ["i_l.d", "i_l.q", "v_c.d", "v_c.q", "i_g.d", "i_g.q", "theta"];
const ISLAND_COMPONENTS: [&str; ISLAND_DIM] = ["i_l.d", "i_l.q", "v_c.d", "v_c.q", "theta"];

enum Ctl {
    Following(FollowingControl),
    Forming(FormingControl),
}

impl Ctl {
    fn step(&mut self, meas: &LocalMeasurements, t: f64, dt: f64) -> ControlCommand {
        match self {
            Ctl::Following(c) => c.step(meas, t, dt),
            Ctl::Forming(c) => c.step(meas, t, dt),
        }
    }

    fn set_setpoints(&mut self, p: Option<f64>, q: Option<f64>) {
        let (p0, q0) = match self {
            Ctl::Following(c) => (c.p_set, c.q_set),
            Ctl::Forming(c) => (c.p_set, c.q_set),
        };
        let (p, q) = (p.unwrap_or(p0), q.unwrap_or(q0));
        match self {
            Ctl::Following(c) => c.set_setpoints(p, q),
            Ctl::Forming(c) => c.set_setpoints(p, q),
        }
    }

    fn epsilon_at(&self, t: f64) -> f64 {
        match self {
            Ctl::Following(_) => 0.0,
            Ctl::Forming(c) => c.epsilon_at(t),
        }
    }
}

fn build_controller(
    sc: &Scenario,
    spec: &InverterSpec,
    plant: &PlantParams,
) -> Result<Ctl, ScenarioError> {
    match spec.controller {
        ControllerKind::Following => {
            let mut cfg = FollowingConfig::defaults(plant);
            cfg.p_set = spec.p_set;
            cfg.q_set = spec.q_set;
            if let Some(g) = spec.damp_g {
                cfg.damp_g = g;
            }
            Ok(Ctl::Following(FollowingControl::new(cfg, plant)?))
        }
        ControllerKind::Shaped => {
            let schedule = sc.epsilon_schedule(&spec.name);
            let mut cfg = FormingConfig::shaped_defaults(plant, spec.omega_lpf, schedule);
            cfg.p_set = spec.p_set;
            cfg.q_set = spec.q_set;
            Ok(Ctl::Forming(FormingControl::new(
                FormingKind::Shaped,
                cfg,
                plant,
            )?))
        }
        ControllerKind::Droop => {
            let mut cfg = FormingConfig::droop_defaults(plant, spec.omega_lpf);
            cfg.p_set = spec.p_set;
            cfg.q_set = spec.q_set;
            Ok(Ctl::Forming(FormingControl::new(
                FormingKind::Droop,
                cfg,
                plant,
            )?))
        }
    }
}

/// Snapshot of the network at one instant: per-inverter states with line
/// currents resolved, plus the bus voltage and load current.
struct BusView {
    states: Vec<InverterState>,
    v_pcc: DqPair,
    i_load: DqPair,
}

struct Engine<'a> {
    sc: &'a Scenario,
    plant: PlantParams,
    per: usize,
    y_branch: Vec<Complex>,
}

impl Engine<'_> {
    fn view(&self, x: &[f64], t: f64) -> Result<BusView, ScenarioError> {
        match self.sc.topology {
            Topology::StiffGrid => {
                let states = x
                    .chunks_exact(STIFF_DIM)
                    .map(InverterState::from_slice)
                    .collect();
                Ok(BusView {
                    states,
                    v_pcc: DqPair::new(self.plant.v_0, 0.0),
                    i_load: DqPair::ZERO,
                })
            }
            Topology::Islanded => {
                let v_c: Vec<DqPair> = x
                    .chunks_exact(ISLAND_DIM)
                    .map(|c| DqPair::new(c[2], c[3]))
                    .collect();
                let y_load = self.sc.load_at(t).admittance(self.plant.v_0);
                let sol = solve_pcc(&v_c, &self.y_branch, y_load)?;
                let states = x
                    .chunks_exact(ISLAND_DIM)
                    .zip(&sol.i_g)
                    .map(|(c, ig)| InverterState {
                        i_l: DqPair::new(c[0], c[1]),
                        v_c: DqPair::new(c[2], c[3]),
                        i_g: *ig,
                        theta: c[4],
                    })
                    .collect();
                Ok(BusView {
                    states,
                    v_pcc: sol.v_pcc,
                    i_load: sol.i_load,
                })
            }
        }
    }

    /// Derivative of the full state vector under held commands. Returns
    /// whether any modulation clamped during the evaluation.
    fn derivs(
        &self,
        t: f64,
        x: &[f64],
        cmds: &[ControlCommand],
        dx: &mut [f64],
    ) -> Result<bool, ScenarioError> {
        let view = self.view(x, t)?;
        let mut saturated = false;
        for (i, s) in view.states.iter().enumerate() {
            let (d, sat) =
                inverter_derivatives(s, cmds[i].m, cmds[i].omega, view.v_pcc, &self.plant);
            saturated |= sat;
            let o = i * self.per;
            match self.sc.topology {
                Topology::StiffGrid => d.write_to(&mut dx[o..o + STIFF_DIM]),
                Topology::Islanded => {
                    dx[o] = d.d_i_l.d;
                    dx[o + 1] = d.d_i_l.q;
                    dx[o + 2] = d.d_v_c.d;
                    dx[o + 3] = d.d_v_c.q;
                    dx[o + 4] = d.d_theta;
                }
            }
        }
        Ok(saturated)
    }

    fn check_bounded(&self, x: &[f64], t: f64) -> Result<(), ScenarioError> {
        for (idx, &v) in x.iter().enumerate() {
            if !v.is_finite() || v.abs() > DIVERGENCE_BOUND {
                let comp = match self.sc.topology {
                    Topology::StiffGrid => STIFF_COMPONENTS[idx % self.per],
                    Topology::Islanded => ISLAND_COMPONENTS[idx % self.per],
                };
                return Err(ScenarioError::Diverged {
                    signal: format!("{}.{}", self.sc.inverters[idx / self.per].name, comp),
                    value: v,
                    t,
                });
            }
        }
        Ok(())
    }
}

/// Run a validated scenario to completion and return the recorded trace.
///
/// The trace carries, per inverter, the line-side powers, capacitor voltage
/// amplitude, commanded frequency, leakage value, and a saturation flag,
/// plus the bus voltage amplitude and delivered load powers. Rows start at
/// t = 0; the settling interval `pre_roll` before it is simulated but not
/// recorded.
pub fn run_scenario(sc: &Scenario) -> Result<Trace, ScenarioError> {
    sc.validate()?;
    let plant = sc.plant;
    let n = sc.inverters.len();

    let per = match sc.topology {
        Topology::StiffGrid => STIFF_DIM,
        Topology::Islanded => ISLAND_DIM,
    };
    let engine = Engine {
        sc,
        plant,
        per,
        y_branch: vec![
            Complex::ONE / Complex::new(plant.r_g, plant.omega_0 * plant.l_g);
            n
        ],
    };

    let mut ctls = Vec::with_capacity(n);
    for spec in &sc.inverters {
        ctls.push(build_controller(sc, spec, &plant)?);
    }

    // Quiescent start: nominal capacitor voltage, the inductor current that
    // feeds exactly the capacitor's reactive draw, no line current.
    let mut x = vec![0.0; per * n];
    for i in 0..n {
        let o = i * per;
        x[o + 1] = plant.omega_0 * plant.c_i * plant.v_0;
        x[o + 2] = plant.v_0;
    }

    let dt = sc.dt;
    let record_every = (sc.record_dt / dt).round() as usize;
    let k0 = (sc.pre_roll / dt).round() as usize;
    let n_rows = (sc.duration / sc.record_dt).round() as usize;
    let steps_total = k0 + n_rows * record_every;

    let mut names = vec!["t".to_string()];
    for inv in &sc.inverters {
        for col in ["p_w", "q_var", "v_amp", "omega", "eps", "sat"] {
            names.push(format!("{}_{}", inv.name, col));
        }
    }
    names.extend(["v_pcc_amp".into(), "load_p_w".into(), "load_q_var".into()]);
    let mut trace = Trace::new(names, sc.record_dt);

    let dim = per * n;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut xs = vec![0.0; dim];
    let mut row = vec![0.0; trace.names().len()];

    let mut cmds = vec![
        ControlCommand {
            m: DqPair::ZERO,
            omega: plant.omega_0,
            saturated: false,
        };
        n
    ];
    let mut next_event = 0usize;
    let mut sat_pending = false;

    for k in 0..=steps_total {
        let t = (k as f64 - k0 as f64) * dt;
        let view = engine.view(&x, t)?;

        if k < steps_total {
            // Events take effect in the control step that starts at their
            // timestamp; load changes act through the timeline instead.
            while next_event < sc.events.len() && sc.events[next_event].t <= t + 0.5 * dt {
                if let EventAction::SetPower { inverter, p_w, q_var } =
                    &sc.events[next_event].action
                {
                    let i = sc.inverters.iter().position(|s| &s.name == inverter).unwrap();
                    ctls[i].set_setpoints(*p_w, *q_var);
                }
                next_event += 1;
            }
            for (i, ctl) in ctls.iter_mut().enumerate() {
                let meas = LocalMeasurements::from_global(&view.states[i]);
                cmds[i] = ctl.step(&meas, t, dt);
                sat_pending |= cmds[i].saturated;
            }
        }

        if k >= k0 && (k - k0) % record_every == 0 {
            row[0] = ((k - k0) / record_every) as f64 * sc.record_dt;
            let mut c = 1;
            let mut p_inj = 0.0;
            let mut loss = 0.0;
            for (i, s) in view.states.iter().enumerate() {
                let (p, q) = power_from_dq(s.v_c, s.i_g);
                p_inj += p;
                loss += 1.5 * plant.r_g * (s.i_g.d * s.i_g.d + s.i_g.q * s.i_g.q);
                row[c] = p;
                row[c + 1] = q;
                row[c + 2] = s.v_c.amplitude();
                row[c + 3] = cmds[i].omega;
                row[c + 4] = ctls[i].epsilon_at(t);
                row[c + 5] = if sat_pending { 1.0 } else { 0.0 };
                c += 6;
            }
            let (p_load, q_load) = power_from_dq(view.v_pcc, view.i_load);
            row[c] = view.v_pcc.amplitude();
            row[c + 1] = p_load;
            row[c + 2] = q_load;
            trace.push_row(&row);
            if sat_pending {
                trace.saturated_samples += 1;
            }
            sat_pending = false;
            if sc.topology == Topology::Islanded {
                // Injected power minus line loss must land on the load.
                let residual = (p_inj - loss - p_load).abs() / p_load.abs().max(1e3);
                trace.max_power_imbalance = trace.max_power_imbalance.max(residual);
            }
        }

        if k < steps_total {
            let h = dt;
            sat_pending |= engine.derivs(t, &x, &cmds, &mut k1)?;
            for j in 0..dim {
                xs[j] = x[j] + 0.5 * h * k1[j];
            }
            sat_pending |= engine.derivs(t + 0.5 * h, &xs, &cmds, &mut k2)?;
            for j in 0..dim {
                xs[j] = x[j] + 0.5 * h * k2[j];
            }
            sat_pending |= engine.derivs(t + 0.5 * h, &xs, &cmds, &mut k3)?;
            for j in 0..dim {
                xs[j] = x[j] + h * k3[j];
            }
            sat_pending |= engine.derivs(t + h, &xs, &cmds, &mut k4)?;
            for j in 0..dim {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            engine.check_bounded(&x, t + h)?;
        }
    }

    Ok(trace)
}
