//! First-order low-pass filter, discretized exactly for piecewise-constant
//! input.

/// y' = omega_c (x - y), stepped as y += (1 - e^{-omega_c dt})(x - y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassFilter {
    omega_c: f64,
    y: f64,
}

impl LowPassFilter {
    pub fn new(omega_c: f64) -> LowPassFilter {
        LowPassFilter { omega_c, y: 0.0 }
    }

    /// Start from a settled output, avoiding a startup transient.
    pub fn with_initial(omega_c: f64, y0: f64) -> LowPassFilter {
        LowPassFilter { omega_c, y: y0 }
    }

    pub fn output(&self) -> f64 {
        self.y
    }

    pub fn step(&mut self, x: f64, dt: f64) -> f64 {
        self.y += (1.0 - (-self.omega_c * dt).exp()) * (x - self.y);
        self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_constant_input() {
        // The discrete update reproduces the analytic exponential response
        // at machine precision regardless of step size.
        for dt in [1e-5, 1e-3, 0.1] {
            let mut f = LowPassFilter::new(20.0);
            let mut t = 0.0;
            for _ in 0..200 {
                f.step(1.0, dt);
                t += dt;
                let analytic = 1.0 - (-20.0 * t).exp();
                assert!((f.output() - analytic).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reaches_63_percent_at_one_time_constant() {
        let omega_c = 10.0 * std::f64::consts::PI;
        let mut f = LowPassFilter::new(omega_c);
        let dt = 5e-5;
        let n = (1.0 / omega_c / dt).round() as usize;
        for _ in 0..n {
            f.step(1.0, dt);
        }
        assert!((f.output() - 0.632_12).abs() < 1e-3, "y = {}", f.output());
    }

    #[test]
    fn double_frequency_ripple_is_attenuated() {
        // |H(j 2 w0)| = 1 / sqrt(1 + (754 / omega_c)^2) = 0.04163 for the
        // default measurement bandwidth of 10 pi rad/s.
        let omega_c = 10.0 * std::f64::consts::PI;
        let w_ripple = 2.0 * 2.0 * std::f64::consts::PI * 60.0;
        let expected = 1.0 / (1.0 + (w_ripple / omega_c).powi(2)).sqrt();
        let mut f = LowPassFilter::new(omega_c);
        let dt = 5e-5;
        let mut t = 0.0;
        // Settle, then record one ripple period.
        while t < 0.5 {
            f.step((w_ripple * t).sin(), dt);
            t += dt;
        }
        let mut peak: f64 = 0.0;
        let t_stop = t + 2.0 * std::f64::consts::PI / w_ripple;
        while t < t_stop {
            f.step((w_ripple * t).sin(), dt);
            t += dt;
            peak = peak.max(f.output().abs());
        }
        assert!(
            (peak - expected).abs() / expected < 0.05,
            "peak {peak}, expected {expected}"
        );
    }

    #[test]
    fn preset_output_starts_settled() {
        let mut f = LowPassFilter::with_initial(31.4, 5.0);
        f.step(5.0, 1e-3);
        assert!((f.output() - 5.0).abs() < 1e-12);
    }
}
