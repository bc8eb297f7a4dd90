//! Discrete-time inverter controllers.
//!
//! Two controller families are provided:
//!
//! * [`FormingControl`]: forms its own voltage through a droop-style outer
//!   layer feeding a voltage/current cascade. The outer gain is a shaped
//!   regulator whose leakage `eps` morphs the closed loop between perfect
//!   power tracking (`eps = 0`, follower behaviour) and conventional droop
//!   (`eps` large, forming behaviour).
//! * [`FollowingControl`]: a conventional follower that locks to the bus
//!   with a PLL and injects current set by the power references.
//!
//! All controllers step at a fixed sample time with zero-order-hold
//! outputs; the plant is integrated between samples.

mod channel;
mod filter;
mod following;
mod forming;
mod inner;
mod pll;
mod transition;

pub use channel::{ChannelGains, ShapedChannel};
pub use filter::LowPassFilter;
pub use following::{FollowingConfig, FollowingControl};
pub use forming::{FormingConfig, FormingControl, FormingKind};
pub use inner::{CurrentLoop, CurrentLoopGains, VoltageLoop, VoltageLoopGains};
pub use pll::{Pll, PllGains};
pub use transition::{SegmentShape, TransitionSchedule, TransitionSegment};

use crate::plant::{power_from_dq, DqPair, InverterState};

/// Errors from controller configuration.
#[derive(Debug, thiserror::Error)]
pub enum ControlError {
    #[error("controller gain {name} must be positive, got {value}")]
    InvalidGain { name: &'static str, value: f64 },
    #[error("invalid transition schedule: {0}")]
    InvalidSchedule(String),
}

/// Feedback signals one controller sees, expressed in its local frame.
/// The powers are computed at the capacitor node from global-frame signals
/// (they are frame invariant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMeasurements {
    pub v_c: DqPair,
    pub i_l: DqPair,
    pub i_g: DqPair,
    pub p: f64,
    pub q: f64,
}

impl LocalMeasurements {
    pub fn from_global(s: &InverterState) -> LocalMeasurements {
        let (p, q) = power_from_dq(s.v_c, s.i_g);
        LocalMeasurements {
            v_c: s.v_c.to_frame(s.theta),
            i_l: s.i_l.to_frame(s.theta),
            i_g: s.i_g.to_frame(s.theta),
            p,
            q,
        }
    }
}

/// One controller sample: local-frame modulation command (already clamped
/// to the unit circle), commanded frequency, and whether the raw command
/// exceeded the modulation limit this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub m: DqPair,
    pub omega: f64,
    pub saturated: bool,
}

/// Clamp a modulation command to the unit circle.
pub(crate) fn clamp_modulation(m: DqPair) -> (DqPair, bool) {
    let mag = m.amplitude();
    if mag > 1.0 {
        (m * (1.0 / mag), true)
    } else {
        (m, false)
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    //! A one-inverter, stiff-bus closed loop small enough for unit tests.

    use super::{ControlCommand, LocalMeasurements};
    use crate::numerics::{rk4_integrate, OdeSystem};
    use crate::plant::{inverter_derivatives, DqPair, InverterState, PlantParams};

    pub struct StiffRun {
        pub state: InverterState,
        pub meas: LocalMeasurements,
        pub last: ControlCommand,
    }

    /// Step a controller against the full plant with the bus voltage pinned
    /// at nominal. One RK4 step of width `dt` per controller sample.
    ///
    /// The plant starts at the no-load quiescent point (capacitor charged,
    /// filter inductor carrying the capacitor's magnetizing current), the
    /// state a breaker-closed inverter idles at before any power command.
    pub fn run_stiff_grid<F>(mut step: F, t_end: f64, dt: f64) -> StiffRun
    where
        F: FnMut(&LocalMeasurements, f64, f64) -> ControlCommand,
    {
        let p = PlantParams::default();
        let v_pcc = DqPair::new(p.v_0, 0.0);
        let mut state = InverterState {
            v_c: v_pcc,
            i_l: DqPair::new(0.0, p.omega_0 * p.c_i * p.v_0),
            ..InverterState::default()
        };
        let mut t = 0.0;
        let mut last = ControlCommand {
            m: DqPair::ZERO,
            omega: p.omega_0,
            saturated: false,
        };
        let n = (t_end / dt).round() as usize;
        let mut buf = [0.0; InverterState::DIM];
        for _ in 0..n {
            let meas = LocalMeasurements::from_global(&state);
            let cmd = step(&meas, t, dt);
            let sys = OdeSystem::new(InverterState::DIM, |_tt, x, dx| {
                let s = InverterState::from_slice(x);
                let (d, _) = inverter_derivatives(&s, cmd.m, cmd.omega, v_pcc, &p);
                d.write_to(dx);
            });
            state.write_to(&mut buf);
            let traj = rk4_integrate(&sys, &buf, t, t + dt, dt).expect("plant step");
            state = InverterState::from_slice(traj.last());
            t += dt;
            last = cmd;
        }
        StiffRun {
            state,
            meas: LocalMeasurements::from_global(&state),
            last,
        }
    }
}
mod scratch_debug;
