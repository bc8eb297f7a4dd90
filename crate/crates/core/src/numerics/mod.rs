//! Dense numerics kernels sized for this crate: every matrix in the control
//! analysis is at most 3x3 (9x9 once a Lyapunov equation is vectorized), so
//! the solvers favour plain algorithms with tight, testable contracts over
//! generality.

mod complex;
mod lyapunov;
mod matrix;
mod ode;
mod poly;

pub use complex::Complex;
pub use lyapunov::solve_lyapunov;
pub use matrix::{sym_eigs, sym_spectral_norm, Matrix};
pub use ode::{rk4_integrate, rk4_step, OdeSystem, Rk4Scratch, Trajectory};
pub use poly::{poly_roots, routh_hurwitz_cubic, Polynomial};

/// Errors raised by the numerics kernels. Dimension mismatches are programmer
/// errors and panic instead; these variants are genuine runtime outcomes.
#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not Hurwitz (max eigenvalue real part {0:.6e})")]
    NotHurwitz(f64),
    #[error("linear system is singular (pivot {0:.3e})")]
    Singular(f64),
    #[error("matrix is not positive definite (pivot {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,
    #[error("root iteration did not reach the residual tolerance (residual {0:.3e})")]
    RootsNotConverged(f64),
    #[error("eigenvalue iteration did not converge")]
    EigsNotConverged,
    #[error("integration diverged at t = {t:.9}: non-finite state or derivative")]
    IntegrationDiverged { t: f64 },
    #[error("invalid integration window or step: t0 {t0}, t1 {t1}, dt {dt}")]
    BadTimeStep { t0: f64, t1: f64, dt: f64 },
    #[error("Lyapunov residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    LyapunovResidual { residual: f64, tol: f64 },
}
