//! Simulation and analysis library for inverter-based microgrids.
//!
//! The crate models switch-averaged three-phase inverters in the synchronous
//! (dq) reference frame and the controllers that run on them:
//!
//! * conventional grid-following (GFL) control: a PLL plus current commands,
//! * grid-forming (GFM) Pf/QV droop control,
//! * a frequency-shaped GFL controller whose droop gains carry a leaky
//!   integral branch `k_i / (s + eps)`; `eps = 0` gives exact power tracking
//!   (GFL behaviour) and large `eps` recovers plain droop (GFM behaviour),
//!   so a single scalar schedule moves the unit between the two modes.
//!
//! On top of the time-domain engine sit small-signal tools: closed-loop
//! transfer functions of the droop power loops, Routh-Hurwitz and root tests
//! of the active-loop characteristic cubic, a Lyapunov-based certificate that
//! bounds state growth during a GFL<->GFM transition ramp, and the
//! virtual-synchronous-machine equivalence of droop control.
//!
//! Modules build bottom-up: [`numerics`] (dense linear algebra, RK4,
//! polynomial roots, Lyapunov solve), [`plant`] (dq transforms, filter and
//! line dynamics, network solve), [`control`] (inner loops, PLL, droop and
//! frequency-shaped outer loops, transition schedules), [`analysis`]
//! (transfer functions, stability, certificates), [`scenarios`] (scripted
//! studies, traces, metrics).

pub mod analysis;
pub mod control;
pub mod numerics;
pub mod plant;
pub mod scenarios;
