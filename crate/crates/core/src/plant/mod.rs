//! Switch-averaged electrical model of a three-phase inverter behind an LC
//! filter and a series line, expressed in a synchronous dq frame.
//!
//! The global simulation frame rotates at the nominal grid frequency `w0`;
//! balanced three-phase quantities are constants in it. Each controller keeps
//! its own angle relative to this frame, so the plant equations below always
//! use `w0` for the frame-rotation cross-coupling terms.

mod dq;
mod inverter;
mod network;
mod params;
mod power_flow;

pub use dq::{abc_to_dq, dq_to_abc, DqPair};
pub use inverter::{inverter_derivatives, power_from_dq, InverterDerivatives, InverterState};
pub use network::{solve_pcc, LoadSpec, NetworkSolution};
pub use params::PlantParams;
pub use power_flow::{exact_power_flow, linearized_power_flow};

/// Errors from plant model construction and the network solve.
#[derive(Debug, thiserror::Error)]
pub enum PlantError {
    #[error("plant parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("islanded network needs at least one voltage-forming inverter")]
    NoFormingElement,
    #[error("network solve is singular: total admittance magnitude {0:.3e}")]
    SingularNetwork(f64),
}
