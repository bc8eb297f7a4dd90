//! Fixed-step classical Runge-Kutta (RK4). The simulation engine steps plant
//! and controllers on one fixed grid, so there is no adaptive machinery; the
//! only refinement is that a final partial step lands exactly on `t1`.

use super::NumericsError;

/// A first-order ODE `dx/dt = f(t, x)` with a fixed dimension. The derivative
/// writes into a caller-provided slice to keep the hot loop allocation-free.
pub struct OdeSystem<'a> {
    pub dim: usize,
    pub f: Box<dyn Fn(f64, &[f64], &mut [f64]) + 'a>,
}

impl<'a> OdeSystem<'a> {
    pub fn new(dim: usize, f: impl Fn(f64, &[f64], &mut [f64]) + 'a) -> OdeSystem<'a> {
        OdeSystem { dim, f: Box::new(f) }
    }
}

/// Work buffers for [`rk4_step`], reused across steps.
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Rk4Scratch {
        Rk4Scratch {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

/// Advances `x` by one RK4 step of size `dt`. Fails if the state or any stage
/// derivative goes non-finite, reporting the step's start time.
pub fn rk4_step(
    f: &dyn Fn(f64, &[f64], &mut [f64]),
    t: f64,
    x: &mut [f64],
    dt: f64,
    s: &mut Rk4Scratch,
) -> Result<(), NumericsError> {
    let n = x.len();
    debug_assert!(s.k1.len() == n);
    let half = 0.5 * dt;

    f(t, x, &mut s.k1);
    for i in 0..n {
        s.tmp[i] = x[i] + half * s.k1[i];
    }
    f(t + half, &s.tmp, &mut s.k2);
    for i in 0..n {
        s.tmp[i] = x[i] + half * s.k2[i];
    }
    f(t + half, &s.tmp, &mut s.k3);
    for i in 0..n {
        s.tmp[i] = x[i] + dt * s.k3[i];
    }
    f(t + dt, &s.tmp, &mut s.k4);

    let sixth = dt / 6.0;
    let mut finite = true;
    for i in 0..n {
        x[i] += sixth * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
        finite &= x[i].is_finite();
    }
    if !finite {
        return Err(NumericsError::IntegrationDiverged { t });
    }
    Ok(())
}

/// States sampled on the integration grid, one row per accepted step
/// (including the initial state).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Integrates from `t0` to `t1` with fixed step `dt`, sampling every step.
/// If `t1 - t0` is not an integer number of steps the last step is shortened
/// so the final sample lies exactly on `t1`.
pub fn rk4_integrate(
    sys: &OdeSystem,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory, NumericsError> {
    if !(dt > 0.0) || !(t1 > t0) || !dt.is_finite() || !t0.is_finite() || !t1.is_finite() {
        return Err(NumericsError::BadTimeStep { t0, t1, dt });
    }
    assert_eq!(x0.len(), sys.dim, "initial state dimension mismatch");

    let span = t1 - t0;
    let n_full = ((span / dt) * (1.0 + 1e-12)).floor() as u64;
    let mut x: Vec<f64> = x0.to_vec();
    let mut scratch = Rk4Scratch::new(sys.dim);
    let mut times = Vec::with_capacity(n_full as usize + 2);
    let mut states = Vec::with_capacity(n_full as usize + 2);
    times.push(t0);
    states.push(x.clone());

    for i in 0..n_full {
        let t = t0 + i as f64 * dt;
        rk4_step(&sys.f, t, &mut x, dt, &mut scratch)?;
        times.push(t0 + (i + 1) as f64 * dt);
        states.push(x.clone());
    }
    let t_reached = t0 + n_full as f64 * dt;
    let rem = t1 - t_reached;
    if rem > 1e-9 * dt {
        rk4_step(&sys.f, t_reached, &mut x, rem, &mut scratch)?;
        times.push(t1);
        states.push(x.clone());
    } else if let Some(last) = times.last_mut() {
        *last = t1; // absorb float residue so callers can trust the endpoint
    }
    Ok(Trajectory { times, states })
}
