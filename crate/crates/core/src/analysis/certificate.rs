//! Lyapunov certificate for leakage transitions.
//!
//! While the leakage is frozen anywhere on its travel range the active loop
//! is Hurwitz, so `V(x) = x' W(eps) x` with `A' W + W A = -I` decays. While
//! the leakage moves, W moves with it and V can grow, at a rate no faster
//! than the largest generalized eigenvalue of dW/deps against W times the
//! leakage speed. Integrating that rate over one monotone sweep bounds the
//! total energy growth by a factor alpha independent of how fast the sweep
//! runs; the Rayleigh bounds of W convert it into a plain norm bound, and
//! the off-transition decay rate converts it into a minimum hold time
//! between consecutive sweeps.
//!
//! The growth exponent used here is the integral of the pointwise
//! generalized-eigenvalue rate over the sweep. The cruder product bound
//! `max ||dW/deps|| / min eigmin(W) * eps_max` bounds the same quantity but
//! overshoots by orders of magnitude (its exponential overflows a double at
//! the bench gains); it is reported in log space as a diagnostic.

use serde::Serialize;

use crate::control::{ChannelGains, TransitionSchedule};
use crate::numerics::{solve_lyapunov, sym_eigs, sym_spectral_norm, Matrix, NumericsError};
use crate::plant::PlantParams;

use super::power_loops::state_matrix;
use super::AnalysisError;

/// Default number of leakage samples. W(eps) has smooth rational entries,
/// so a modest grid resolves it; the density is a knob, not a guess baked
/// into the math.
pub const DEFAULT_CERTIFICATE_GRID: usize = 41;

/// Per-sample data backing a certificate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertificateGridPoint {
    /// Leakage value of this sample.
    pub eps: f64,
    /// Smallest eigenvalue of W(eps); positive whenever the loop is stable.
    pub lambda_min: f64,
    /// Largest eigenvalue of W(eps).
    pub lambda_max: f64,
    /// Spectral norm of dW/deps.
    pub dw_norm: f64,
    /// Pointwise growth rate: largest |generalized eigenvalue| of dW/deps
    /// against W.
    pub q: f64,
}

/// Energy and norm growth bounds for one monotone leakage sweep.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionCertificate {
    /// Exponent of the energy growth bound: integral of q over the sweep.
    pub log_alpha: f64,
    /// Energy growth bound `exp(log_alpha)`: V never exceeds alpha times
    /// its value when the sweep started, however fast the sweep runs.
    pub alpha_bound: f64,
    /// Norm growth bound: `||x(t)||^2 <= state_norm_gain * ||x(0)||^2`
    /// during the sweep, from alpha weighted by the Rayleigh bounds of W.
    pub state_norm_gain: f64,
    /// Minimum hold time between consecutive sweeps, seconds. Off-sweep the
    /// energy obeys `dV/dt <= -V / lambda_max`, so holding this long undoes
    /// the worst-case growth of one sweep.
    pub dwell_time: f64,
    /// The cruder product-bound exponent, for comparison with `log_alpha`.
    pub coarse_log_alpha: f64,
    /// Upper end of the leakage travel range covered.
    pub eps_max: f64,
    pub grid: Vec<CertificateGridPoint>,
}

/// Certificate on the default grid. See [`transition_certificate_with_grid`].
pub fn transition_certificate(
    plant: &PlantParams,
    gains: &ChannelGains,
    schedule: &TransitionSchedule,
) -> Result<TransitionCertificate, AnalysisError> {
    transition_certificate_with_grid(plant, gains, schedule, DEFAULT_CERTIFICATE_GRID)
}

/// Certifies leakage sweeps over `[0, schedule.max_epsilon()]` on a uniform
/// grid of `grid_points` samples. Each sample solves a Lyapunov equation,
/// bounds W by its extreme eigenvalues, and differentiates W by central
/// finite differences (one-sided second-order stencils at the interval
/// ends, step `eps_max / 1000`). Fails with the offending leakage value if
/// the loop is unstable anywhere on the grid or its stencils.
pub fn transition_certificate_with_grid(
    plant: &PlantParams,
    gains: &ChannelGains,
    schedule: &TransitionSchedule,
    grid_points: usize,
) -> Result<TransitionCertificate, AnalysisError> {
    assert!(grid_points >= 2, "certificate grid needs at least two points");
    let eps_max = schedule.max_epsilon();
    let degenerate = eps_max == 0.0;
    let n = if degenerate { 1 } else { grid_points };
    let h = if degenerate { 1e-3 } else { eps_max / 1000.0 };

    let w_of = |eps: f64| -> Result<Matrix, AnalysisError> {
        let (a, _) = state_matrix(plant, gains, eps);
        match solve_lyapunov(&a) {
            Ok(w) => Ok(w),
            Err(NumericsError::NotHurwitz(_)) => {
                Err(AnalysisError::CertificateUnavailable { eps })
            }
            Err(other) => Err(AnalysisError::Numerics(other)),
        }
    };
    // second-order stencils that never leave [0, eps_max]
    let dw_of = |eps: f64| -> Result<Matrix, AnalysisError> {
        let scale = 1.0 / (2.0 * h);
        if eps - h < 0.0 {
            let w0 = w_of(eps)?;
            let w1 = w_of(eps + h)?;
            let w2 = w_of(eps + 2.0 * h)?;
            Ok(w0.scale(-3.0).add_scaled(&w1, 4.0).add_scaled(&w2, -1.0).scale(scale))
        } else if eps + h > eps_max {
            let w0 = w_of(eps)?;
            let w1 = w_of(eps - h)?;
            let w2 = w_of(eps - 2.0 * h)?;
            Ok(w0.scale(3.0).add_scaled(&w1, -4.0).add_scaled(&w2, 1.0).scale(scale))
        } else {
            let wp = w_of(eps + h)?;
            let wm = w_of(eps - h)?;
            Ok(wp.add_scaled(&wm, -1.0).scale(scale))
        }
    };

    let mut grid = Vec::with_capacity(n);
    for i in 0..n {
        let eps = if n == 1 {
            0.0
        } else {
            eps_max * i as f64 / (n - 1) as f64
        };
        let w = w_of(eps)?;
        let lams = sym_eigs(&w)?;
        let lambda_min = lams[0];
        let lambda_max = lams[lams.len() - 1];
        if !(lambda_min > 0.0) {
            return Err(AnalysisError::CertificateUnavailable { eps });
        }
        let dw = dw_of(eps)?;
        let dw_norm = sym_spectral_norm(&dw)?;
        let q = max_abs_generalized_eig(&dw, &w)?;
        grid.push(CertificateGridPoint {
            eps,
            lambda_min,
            lambda_max,
            dw_norm,
            q,
        });
    }

    let mut log_alpha = 0.0;
    for pair in grid.windows(2) {
        log_alpha += 0.5 * (pair[1].q + pair[0].q) * (pair[1].eps - pair[0].eps);
    }
    let min_lambda_min = grid.iter().map(|p| p.lambda_min).fold(f64::INFINITY, f64::min);
    let max_lambda_max = grid.iter().map(|p| p.lambda_max).fold(0.0, f64::max);
    let max_dw_norm = grid.iter().map(|p| p.dw_norm).fold(0.0, f64::max);
    let alpha_bound = log_alpha.exp();
    Ok(TransitionCertificate {
        log_alpha,
        alpha_bound,
        state_norm_gain: alpha_bound * max_lambda_max / min_lambda_min,
        dwell_time: max_lambda_max * log_alpha,
        coarse_log_alpha: max_dw_norm / min_lambda_min * eps_max,
        eps_max,
        grid,
    })
}

/// Largest |lambda| solving `dW v = lambda W v` for symmetric dW and
/// positive definite W, via the Cholesky reduction `L^-1 dW L^-T`.
fn max_abs_generalized_eig(dw: &Matrix, w: &Matrix) -> Result<f64, NumericsError> {
    let l = w.cholesky()?;
    let n = w.rows();
    // Y = L^-1 dW, column by column
    let mut y = Matrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| dw[(i, j)]).collect();
        let sol = l.solve_lower_triangular(&col);
        for i in 0..n {
            y[(i, j)] = sol[i];
        }
    }
    // M^T = L^-1 Y^T, so M = Y L^-T
    let yt = y.transpose();
    let mut mt = Matrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| yt[(i, j)]).collect();
        let sol = l.solve_lower_triangular(&col);
        for i in 0..n {
            mt[(i, j)] = sol[i];
        }
    }
    let m = mt.transpose().symmetrized();
    let eigs = sym_eigs(&m)?;
    Ok(eigs.iter().fold(0.0f64, |acc, &e| acc.max(e.abs())))
}
