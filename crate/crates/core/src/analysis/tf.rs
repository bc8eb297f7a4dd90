//! Rational transfer functions and the frequency grids they are compared on.
//!
//! The analysis layer works with low-order SISO loops, so a plain
//! numerator/denominator pair over real polynomials is enough. No pole-zero
//! cancellation is attempted; callers that build a function from physical
//! pieces get exactly the polynomials those pieces imply.

use crate::numerics::{poly_roots, rk4_integrate, Complex, NumericsError, OdeSystem, Polynomial};

use super::AnalysisError;

/// Ratio of two real polynomials in the Laplace variable `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    /// Builds `num / den`. The denominator must not be the zero polynomial;
    /// an improper ratio (numerator degree above denominator degree) is
    /// allowed and reported by [`TransferFunction::is_proper`].
    pub fn new(num: Polynomial, den: Polynomial) -> Result<TransferFunction, AnalysisError> {
        if den.is_zero() {
            return Err(AnalysisError::ZeroDenominator);
        }
        Ok(TransferFunction { num, den })
    }

    /// Constant gain.
    pub fn constant(gain: f64) -> TransferFunction {
        TransferFunction {
            num: Polynomial::constant(gain),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    /// True when the numerator degree does not exceed the denominator degree.
    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    /// True when the numerator degree is strictly below the denominator's.
    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    /// Value at a complex frequency.
    pub fn eval(&self, s: Complex) -> Complex {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Magnitude at the real frequency `omega` (evaluated on the imaginary
    /// axis).
    pub fn magnitude(&self, omega: f64) -> f64 {
        self.eval(Complex::jomega(omega)).abs()
    }

    /// Gain at `s = 0`. Infinite when the denominator has a root at the
    /// origin and the numerator does not; zero in the opposite case.
    pub fn dc_gain(&self) -> f64 {
        let n0 = self.num.eval(0.0);
        let d0 = self.den.eval(0.0);
        if d0 != 0.0 {
            n0 / d0
        } else if n0 == 0.0 {
            f64::NAN
        } else if n0 > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Denominator roots.
    pub fn poles(&self) -> Result<Vec<Complex>, NumericsError> {
        poly_roots(&self.den)
    }

    /// Numerator roots; a zero numerator has none.
    pub fn zeros(&self) -> Result<Vec<Complex>, NumericsError> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        poly_roots(&self.num)
    }

    /// Product of two transfer functions, without cancellation.
    pub fn mul(&self, other: &TransferFunction) -> TransferFunction {
        TransferFunction {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    /// Sum over the common denominator, without cancellation.
    pub fn add(&self, other: &TransferFunction) -> TransferFunction {
        TransferFunction {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    /// Closing a unit negative-feedback loop around this open-loop function:
    /// `num / (den + num)`.
    pub fn feedback_unity(&self) -> Result<TransferFunction, AnalysisError> {
        TransferFunction::new(self.num.clone(), self.den.add(&self.num))
    }

    /// Unit-step response sampled every `dt` up to `t_end`, via the
    /// controllable canonical realization integrated with RK4. Requires a
    /// proper function; a direct-feedthrough term is split off when the
    /// degrees are equal.
    pub fn step_response(&self, t_end: f64, dt: f64) -> Result<Vec<(f64, f64)>, AnalysisError> {
        if !self.is_proper() {
            return Err(AnalysisError::ImproperTransferFunction {
                num_degree: self.num.degree(),
                den_degree: self.den.degree(),
            });
        }
        let den = self.den.monic();
        let num = self.num.scale(1.0 / self.den.leading());
        let n = den.degree();
        if n == 0 {
            // pure gain, the response is flat
            let gain = num.coeff(0);
            let steps = (t_end / dt).round() as usize;
            return Ok((0..=steps).map(|i| (i as f64 * dt, gain)).collect());
        }
        let feedthrough = if !num.is_zero() && num.degree() == n {
            num.coeff(n)
        } else {
            0.0
        };
        // strictly proper remainder after peeling the feedthrough
        let rem = num.add(&den.scale(-feedthrough));

        // x' = companion(den) x + e_n u, y = rem(x) + feedthrough u, u = 1
        let sys = OdeSystem::new(n, move |_t, x: &[f64], dx: &mut [f64]| {
            for i in 0..n - 1 {
                dx[i] = x[i + 1];
            }
            let mut acc = 1.0; // unit step enters the last integrator
            for i in 0..n {
                acc -= den.coeff(i) * x[i];
            }
            dx[n - 1] = acc;
        });
        let x0 = vec![0.0; n];
        let traj = rk4_integrate(&sys, &x0, 0.0, t_end, dt)?;
        let out = traj
            .times
            .iter()
            .zip(traj.states.iter())
            .map(|(&t, x)| {
                let mut y = feedthrough;
                for i in 0..n {
                    y += rem.coeff(i) * x[i];
                }
                (t, y)
            })
            .collect();
        Ok(out)
    }
}

/// Logarithmically spaced frequency grid with 50 points per decade, both
/// endpoints included. All mismatch metrics in this module use this spacing
/// so comparisons do not depend on an arbitrary resolution choice.
pub fn log_grid(omega_min: f64, omega_max: f64) -> Vec<f64> {
    assert!(
        omega_min > 0.0 && omega_max > omega_min,
        "log grid needs 0 < omega_min < omega_max"
    );
    let decades = (omega_max / omega_min).log10();
    let n = (decades * 50.0).ceil() as usize + 1;
    (0..n)
        .map(|i| omega_min * 10f64.powf(decades * i as f64 / (n - 1) as f64))
        .collect()
}

/// Largest relative magnitude mismatch `| |a| - |b| | / |a|` between two
/// transfer functions over a frequency grid.
pub fn max_relative_mismatch(a: &TransferFunction, b: &TransferFunction, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&w| {
            let ma = a.magnitude(w);
            let mb = b.magnitude(w);
            ((ma - mb) / ma).abs()
        })
        .fold(0.0, f64::max)
}
