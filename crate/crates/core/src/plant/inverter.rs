//! Averaged electrical model of one inverter: LC output filter plus the
//! series line to the point of common coupling.
//!
//! States live in a global synchronous frame rotating at the nominal
//! frequency; each inverter additionally tracks `theta`, the angle of its
//! local control frame relative to that global frame. Controllers work in
//! the local frame, so the modulation command is rotated by `theta` before
//! it drives the bridge.

use super::dq::DqPair;
use super::params::PlantParams;
use crate::numerics::Complex;

/// Dynamic states of one inverter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InverterState {
    /// Filter inductor current.
    pub i_l: DqPair,
    /// Filter capacitor voltage.
    pub v_c: DqPair,
    /// Line current toward the point of common coupling.
    pub i_g: DqPair,
    /// Local control frame angle relative to the global frame.
    pub theta: f64,
}

impl InverterState {
    pub const DIM: usize = 7;

    pub fn write_to(&self, buf: &mut [f64]) {
        buf[0] = self.i_l.d;
        buf[1] = self.i_l.q;
        buf[2] = self.v_c.d;
        buf[3] = self.v_c.q;
        buf[4] = self.i_g.d;
        buf[5] = self.i_g.q;
        buf[6] = self.theta;
    }

    pub fn from_slice(buf: &[f64]) -> InverterState {
        InverterState {
            i_l: DqPair::new(buf[0], buf[1]),
            v_c: DqPair::new(buf[2], buf[3]),
            i_g: DqPair::new(buf[4], buf[5]),
            theta: buf[6],
        }
    }
}

/// Time derivatives matching the layout of [`InverterState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InverterDerivatives {
    pub d_i_l: DqPair,
    pub d_v_c: DqPair,
    pub d_i_g: DqPair,
    pub d_theta: f64,
}

impl InverterDerivatives {
    pub fn write_to(&self, buf: &mut [f64]) {
        buf[0] = self.d_i_l.d;
        buf[1] = self.d_i_l.q;
        buf[2] = self.d_v_c.d;
        buf[3] = self.d_v_c.q;
        buf[4] = self.d_i_g.d;
        buf[5] = self.d_i_g.q;
        buf[6] = self.d_theta;
    }
}

/// Continuous dynamics of one inverter.
///
/// `m_local` is the modulation command in the inverter's local frame;
/// commands with magnitude above 1 are clamped to the unit circle and the
/// returned flag is set. `omega` is the local frame frequency commanded by
/// the controller, `v_pcc` the bus voltage in the global frame.
pub fn inverter_derivatives(
    state: &InverterState,
    m_local: DqPair,
    omega: f64,
    v_pcc: DqPair,
    p: &PlantParams,
) -> (InverterDerivatives, bool) {
    // Local -> global frame.
    let mut m = m_local.to_frame(-state.theta);
    let mag = m.amplitude();
    let saturated = mag > 1.0;
    if saturated {
        m = m * (1.0 / mag);
    }

    let i_l = state.i_l.as_complex();
    let v_c = state.v_c.as_complex();
    let i_g = state.i_g.as_complex();

    let drive = m.as_complex().scale(0.5 * p.v_dc);
    let z_filter = Complex::new(p.r_i, p.omega_0 * p.l_i);
    let z_line = Complex::new(p.r_g, p.omega_0 * p.l_g);

    let d_i_l = (drive - z_filter * i_l - v_c).scale(1.0 / p.l_i);
    let d_v_c = (i_l - i_g - Complex::jomega(p.omega_0 * p.c_i) * v_c).scale(1.0 / p.c_i);
    let d_i_g = (v_c - v_pcc.as_complex() - z_line * i_g).scale(1.0 / p.l_g);

    (
        InverterDerivatives {
            d_i_l: DqPair::from_complex(d_i_l),
            d_v_c: DqPair::from_complex(d_v_c),
            d_i_g: DqPair::from_complex(d_i_g),
            d_theta: omega - p.omega_0,
        },
        saturated,
    )
}

/// Instantaneous powers of a dq voltage/current pair (amplitude-invariant
/// convention, so the 3/2 factor is explicit).
pub fn power_from_dq(v: DqPair, i: DqPair) -> (f64, f64) {
    let p = 1.5 * (v.d * i.d + v.q * i.q);
    let q = 1.5 * (v.q * i.d - v.d * i.q);
    (p, q)
}
