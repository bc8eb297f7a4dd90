//! Frequency-domain and stability analysis of the power-control loops.
//!
//! Around a synchronous operating point the line power flow linearizes into
//! two decoupled SISO loops, one per power channel. This module builds their
//! closed-loop transfer functions, the active loop's characteristic cubic
//! with Routh-Hurwitz and root checks, the companion state matrices that
//! feed the transition certificate, the certificate itself (a Lyapunov bound
//! on state growth while the leakage parameter travels), the sensitivity
//! functions of the conventional follower that motivate the shaped design,
//! and the swing-machine equivalence of filtered droop.
//!
//! Everything here is a pure function of validated configuration; nothing
//! touches simulation state.

mod certificate;
mod power_loops;
mod sensitivity;
mod tf;
mod vsg;

pub use certificate::{
    transition_certificate, transition_certificate_with_grid, CertificateGridPoint,
    TransitionCertificate, DEFAULT_CERTIFICATE_GRID,
};
pub use power_loops::{
    active_power_cltf, char_poly_active, droop_channel_tf, reactive_power_cltf,
    shaped_channel_tf, state_matrix,
};
pub use sensitivity::conventional_gfl_sensitivity;
pub use tf::{log_grid, max_relative_mismatch, TransferFunction};
pub use vsg::{vsg_equivalence, VsgEquivalence, VsgParams};

use crate::numerics::NumericsError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("transfer function denominator is the zero polynomial")]
    ZeroDenominator,
    #[error(
        "step response needs a proper transfer function \
         (numerator degree {num_degree}, denominator degree {den_degree})"
    )]
    ImproperTransferFunction { num_degree: usize, den_degree: usize },
    #[error("certificate unavailable: closed loop is unstable at leakage eps = {eps}")]
    CertificateUnavailable { eps: f64 },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
