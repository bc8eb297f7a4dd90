//! Algebraic network solve for the islanded bus.
//!
//! When no stiff grid pins the point of common coupling, each inverter's
//! line is treated as a quasi-static admittance at the nominal frequency
//! and the bus voltage follows from the node equation
//! `sum_k Y_k (V_ck - v_pcc) = Y_load * v_pcc`.

use serde::{Deserialize, Serialize};

use super::dq::DqPair;
use super::PlantError;
use crate::numerics::Complex;

/// Constant-impedance load, specified by the powers it draws at nominal
/// voltage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LoadSpec {
    pub p_w: f64,
    pub q_var: f64,
}

impl LoadSpec {
    pub fn new(p_w: f64, q_var: f64) -> LoadSpec {
        LoadSpec { p_w, q_var }
    }

    /// Equivalent admittance at phase amplitude `v_nom`.
    ///
    /// S = (3/2) V conj(I) with I = Y V gives Y = 2 (P - jQ) / (3 V^2).
    pub fn admittance(&self, v_nom: f64) -> Complex {
        Complex::new(self.p_w, -self.q_var).scale(2.0 / (3.0 * v_nom * v_nom))
    }
}

/// Result of one bus solve, all in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub v_pcc: DqPair,
    /// Line current of each inverter, same order as the inputs.
    pub i_g: Vec<DqPair>,
    pub i_load: DqPair,
}

/// Solve the islanded bus given each inverter's capacitor voltage (global
/// frame), its line admittance, and the load admittance at the bus.
pub fn solve_pcc(
    v_c: &[DqPair],
    y_branch: &[Complex],
    y_load: Complex,
) -> Result<NetworkSolution, PlantError> {
    assert_eq!(v_c.len(), y_branch.len(), "one admittance per inverter");
    let mut y_sum = y_load;
    let mut inj = Complex::ZERO;
    for (v, y) in v_c.iter().zip(y_branch) {
        y_sum = y_sum + *y;
        inj = inj + *y * v.as_complex();
    }
    let scale = y_load.abs().max(y_branch.iter().fold(0.0, |m, y| m.max(y.abs())));
    if y_sum.abs() <= 1e-12 * (1.0 + scale) {
        return Err(PlantError::SingularNetwork(y_sum.abs()));
    }
    let v_pcc = inj / y_sum;
    let i_g = v_c
        .iter()
        .zip(y_branch)
        .map(|(v, y)| DqPair::from_complex(*y * (v.as_complex() - v_pcc)))
        .collect();
    Ok(NetworkSolution {
        v_pcc: DqPair::from_complex(v_pcc),
        i_g,
        i_load: DqPair::from_complex(y_load * v_pcc),
    })
}
