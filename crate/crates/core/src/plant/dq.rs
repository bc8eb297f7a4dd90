//! Amplitude-invariant dq (Park) transform and frame rotation helpers.
//!
//! Convention: a balanced three-phase set `v_a = V cos(theta)` maps to
//! `(d, q) = (V, 0)` when the transform angle equals the phase angle. A set
//! leading the frame by pi/2 maps to `(0, V)`.

use crate::numerics::Complex;

/// One dq pair. Treated as the complex number `d + j q` where convenient:
/// rotating the frame by `delta` multiplies the pair by `e^{-j delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DqPair {
    pub d: f64,
    pub q: f64,
}

impl DqPair {
    pub const ZERO: DqPair = DqPair { d: 0.0, q: 0.0 };

    pub fn new(d: f64, q: f64) -> DqPair {
        DqPair { d, q }
    }

    pub fn as_complex(self) -> Complex {
        Complex::new(self.d, self.q)
    }

    pub fn from_complex(z: Complex) -> DqPair {
        DqPair { d: z.re, q: z.im }
    }

    pub fn amplitude(self) -> f64 {
        self.d.hypot(self.q)
    }

    /// Re-express this pair in a frame rotated by `delta` radians ahead of
    /// the current one.
    pub fn to_frame(self, delta: f64) -> DqPair {
        let (s, c) = delta.sin_cos();
        DqPair {
            d: self.d * c + self.q * s,
            q: -self.d * s + self.q * c,
        }
    }
}

impl std::ops::Add for DqPair {
    type Output = DqPair;
    fn add(self, rhs: DqPair) -> DqPair {
        DqPair::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl std::ops::Sub for DqPair {
    type Output = DqPair;
    fn sub(self, rhs: DqPair) -> DqPair {
        DqPair::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl std::ops::Mul<f64> for DqPair {
    type Output = DqPair;
    fn mul(self, rhs: f64) -> DqPair {
        DqPair::new(self.d * rhs, self.q * rhs)
    }
}

impl std::ops::Neg for DqPair {
    type Output = DqPair;
    fn neg(self) -> DqPair {
        DqPair::new(-self.d, -self.q)
    }
}

const TWO_THIRDS_PI: f64 = 2.0 * std::f64::consts::FRAC_PI_3;

/// Park transform of instantaneous phase values at transform angle `theta`.
pub fn abc_to_dq(v_a: f64, v_b: f64, v_c: f64, theta: f64) -> DqPair {
    let (s0, c0) = theta.sin_cos();
    let (s1, c1) = (theta - TWO_THIRDS_PI).sin_cos();
    let (s2, c2) = (theta + TWO_THIRDS_PI).sin_cos();
    DqPair {
        d: (2.0 / 3.0) * (v_a * c0 + v_b * c1 + v_c * c2),
        q: -(2.0 / 3.0) * (v_a * s0 + v_b * s1 + v_c * s2),
    }
}

/// Inverse Park transform: instantaneous phase values of a balanced set.
pub fn dq_to_abc(v: DqPair, theta: f64) -> (f64, f64, f64) {
    let (s0, c0) = theta.sin_cos();
    let (s1, c1) = (theta - TWO_THIRDS_PI).sin_cos();
    let (s2, c2) = (theta + TWO_THIRDS_PI).sin_cos();
    (
        v.d * c0 - v.q * s0,
        v.d * c1 - v.q * s1,
        v.d * c2 - v.q * s2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn balanced(amp: f64, phase: f64, wt: f64) -> (f64, f64, f64) {
        (
            amp * (wt + phase).cos(),
            amp * (wt + phase - TWO_THIRDS_PI).cos(),
            amp * (wt + phase + TWO_THIRDS_PI).cos(),
        )
    }

    #[test]
    fn in_phase_set_maps_to_pure_d() {
        for wt in [0.0, 0.3, 1.7, 4.0] {
            let (a, b, c) = balanced(391.0, 0.0, wt);
            let v = abc_to_dq(a, b, c, wt);
            assert!((v.d - 391.0).abs() < 1e-9, "d = {}", v.d);
            assert!(v.q.abs() < 1e-9, "q = {}", v.q);
        }
    }

    #[test]
    fn quarter_leading_set_maps_to_pure_q() {
        let wt = 0.9;
        let (a, b, c) = balanced(100.0, std::f64::consts::FRAC_PI_2, wt);
        let v = abc_to_dq(a, b, c, wt);
        assert!(v.d.abs() < 1e-9);
        assert!((v.q - 100.0).abs() < 1e-9);
    }

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let v = DqPair::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
            let theta = rng.gen_range(-10.0..10.0);
            let (a, b, c) = dq_to_abc(v, theta);
            let back = abc_to_dq(a, b, c, theta);
            assert!((back.d - v.d).abs() < 1e-12 * (1.0 + v.d.abs()));
            assert!((back.q - v.q).abs() < 1e-12 * (1.0 + v.q.abs()));
        }
    }

    #[test]
    fn frame_rotation_matches_complex_phase_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let v = DqPair::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let delta: f64 = rng.gen_range(-6.0..6.0);
            let rotated = v.to_frame(delta);
            // z_local = z_global * e^{-j delta}
            let z = v.as_complex() * Complex::from_polar(1.0, -delta);
            assert!((rotated.d - z.re).abs() < 1e-12 * (1.0 + z.re.abs()));
            assert!((rotated.q - z.im).abs() < 1e-12 * (1.0 + z.im.abs()));
        }
    }

    #[test]
    fn frame_rotation_agrees_with_retransform() {
        // Transforming the same waveform at angle theta+delta must equal
        // rotating the angle-theta result by delta.
        let (a, b, c) = balanced(208.0, 0.4, 2.2);
        let delta = 0.35;
        let direct = abc_to_dq(a, b, c, 2.2 + delta);
        let rotated = abc_to_dq(a, b, c, 2.2).to_frame(delta);
        assert!((direct.d - rotated.d).abs() < 1e-9);
        assert!((direct.q - rotated.q).abs() < 1e-9);
    }
}
