//! Shaped outer regulator for one power channel.
//!
//! The regulator is `K(s) = (k_p + k_i / (s + eps)) * w / (s + w)` acting on
//! a power error, with `w` the measurement bandwidth. The leakage `eps`
//! sets the DC gain: `eps = 0` gives an integrator (the error is driven to
//! zero, follower behaviour), large `eps` leaves plain filtered droop
//! `k_p w / (s + w)` plus a small bias `k_i / eps`.
//!
//! State-space realization used here:
//!
//! ```text
//! u' = w (e - u)          filtered error
//! z' = k_i u - eps(t) z   leaky integral
//! output = k_p u + z
//! ```

use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::numerics::Complex;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelGains {
    pub k_p: f64,
    pub k_i: f64,
    /// Measurement low-pass bandwidth, rad/s.
    pub omega_lpf: f64,
}

impl ChannelGains {
    /// Reference tuning of the frequency channel: k_i a decade below the
    /// measurement bandwidth, so droop equivalence holds at large eps.
    pub fn active_default(omega_lpf: f64) -> ChannelGains {
        let k_p = 2e-4;
        ChannelGains {
            k_p,
            k_i: 0.1 * omega_lpf * k_p,
            omega_lpf,
        }
    }

    /// Reference tuning of the voltage channel.
    pub fn reactive_default(omega_lpf: f64) -> ChannelGains {
        let k_p = 2e-4;
        ChannelGains {
            k_p,
            k_i: omega_lpf * k_p,
            omega_lpf,
        }
    }

    /// Plain droop: no integral action at all.
    pub fn pure_droop(k_p: f64, omega_lpf: f64) -> ChannelGains {
        ChannelGains {
            k_p,
            k_i: 0.0,
            omega_lpf,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let positive = [("k_p", self.k_p), ("omega_lpf", self.omega_lpf)];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ControlError::InvalidGain { name, value });
            }
        }
        if !(self.k_i >= 0.0) || !self.k_i.is_finite() {
            return Err(ControlError::InvalidGain {
                name: "k_i",
                value: self.k_i,
            });
        }
        Ok(())
    }

    /// Frequency response K(s) at fixed leakage.
    pub fn transfer(&self, eps: f64, s: Complex) -> Complex {
        let shaping = Complex::from(self.k_p) + Complex::from(self.k_i) / (s + eps);
        let lpf = Complex::from(self.omega_lpf) / (s + self.omega_lpf);
        shaping * lpf
    }

    /// DC gain at fixed leakage; infinite when the integral is unleaked.
    pub fn dc_gain(&self, eps: f64) -> f64 {
        if self.k_i == 0.0 {
            self.k_p
        } else if eps == 0.0 {
            f64::INFINITY
        } else {
            self.k_p + self.k_i / eps
        }
    }
}

/// Discrete realization of one channel. Advanced with RK4 so the leakage
/// may vary inside a step; at the sample times used here that integrator
/// is exact to well below measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedChannel {
    pub gains: ChannelGains,
    u: f64,
    z: f64,
}

impl ShapedChannel {
    pub fn new(gains: ChannelGains) -> ShapedChannel {
        ShapedChannel { gains, u: 0.0, z: 0.0 }
    }

    pub fn output(&self) -> f64 {
        self.gains.k_p * self.u + self.z
    }

    /// (filtered error, leaky integral)
    pub fn state(&self) -> (f64, f64) {
        (self.u, self.z)
    }

    pub fn reset(&mut self) {
        self.u = 0.0;
        self.z = 0.0;
    }

    /// Advance one sample with the error held constant. `eps_stages` holds
    /// the leakage at the start, midpoint, and end of the step. With
    /// `freeze_integral` the leaky integral is held (anti-windup while the
    /// modulation saturates); the error filter always runs.
    pub fn advance(&mut self, e: f64, eps_stages: [f64; 3], dt: f64, freeze_integral: bool) {
        let w = self.gains.omega_lpf;
        let k_i = self.gains.k_i;
        let f = |u: f64, z: f64, eps: f64| -> (f64, f64) {
            let du = w * (e - u);
            let dz = if freeze_integral { 0.0 } else { k_i * u - eps * z };
            (du, dz)
        };
        let (u, z) = (self.u, self.z);
        let (du1, dz1) = f(u, z, eps_stages[0]);
        let (du2, dz2) = f(u + 0.5 * dt * du1, z + 0.5 * dt * dz1, eps_stages[1]);
        let (du3, dz3) = f(u + 0.5 * dt * du2, z + 0.5 * dt * dz2, eps_stages[1]);
        let (du4, dz4) = f(u + dt * du3, z + dt * dz3, eps_stages[2]);
        self.u += dt / 6.0 * (du1 + 2.0 * du2 + 2.0 * du3 + du4);
        self.z += dt / 6.0 * (dz1 + 2.0 * dz2 + 2.0 * dz3 + dz4);
    }
}
