//! Nonlinear DC and transient analysis over a modified-nodal formulation.

mod dc;
pub mod linalg;
mod mna;
mod transient;
mod waveform;

pub use dc::dc_operating_point;
pub use linalg::{solve_linear, DenseMatrix, SingularMatrix};
pub use mna::{stamp_device, Integration, Prepared, StampState, System};
pub use transient::{transient, transient_with_stats};
pub use waveform::{NewtonStats, Waveform};

use thiserror::Error;

/// Numerical settings for Newton and time stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Per-iteration clamp on any node-voltage update.
    pub dv_max: f64,
    pub reltol_dc: f64,
    pub reltol_tran: f64,
    pub lte_limit: f64,
    pub min_step: f64,
    pub max_iterations: usize,
    /// KCL residual gate at every node.
    pub abstol_current: f64,
    pub initial_step: f64,
    /// Absolute floor added to the relative voltage tolerance.
    pub vntol: f64,
    /// Conductance from every node to ground.
    pub gmin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dv_max: 0.1,
            reltol_dc: 0.1,
            reltol_tran: 0.001,
            lte_limit: 0.001,
            min_step: 50e-18,
            max_iterations: 40,
            abstol_current: 1e-12,
            initial_step: 10e-15,
            vntol: 1e-6,
            gmin: 1e-12,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.dv_max > 0.0
            && self.min_step > 0.0
            && self.reltol_tran > 0.0
            && self.reltol_tran <= self.reltol_dc
            && self.max_iterations >= 1
            && self.lte_limit > 0.0
            && self.abstol_current > 0.0
            && self.initial_step >= self.min_step;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidOptions(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations{}: worst node '{worst_node}', residual {residual:.3e} A", fmt_time(*.time))]
    NoConvergence {
        time: Option<f64>,
        iterations: usize,
        worst_node: String,
        residual: f64,
    },
    #[error("singular matrix at node '{node}'{}", fmt_time(*.time))]
    SingularMatrix { node: String, time: Option<f64> },
    #[error("time step underflow at t = {time:.6e} s")]
    StepUnderflow { time: f64 },
    #[error("circuit cannot be simulated: {0}")]
    InvalidCircuit(String),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

fn fmt_time(t: Option<f64>) -> String {
    t.map(|t| format!(" at t = {t:.6e} s")).unwrap_or_default()
}

/// Converged operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    pub node_names: Vec<String>,
    pub node_voltages: Vec<f64>,
    pub device_names: Vec<String>,
    /// One current per device, in circuit order.
    pub branch_currents: Vec<f64>,
    pub iterations_used: usize,
    /// Largest |KCL residual| over all nodes at the solution.
    pub max_residual: f64,
    pub max_update: f64,
}

impl DcSolution {
    pub fn voltage(&self, node: &str) -> Option<f64> {
        if node == "0" {
            return Some(0.0);
        }
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.node_voltages[i])
    }

    pub fn current(&self, device: &str) -> Option<f64> {
        self.device_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(device))
            .map(|i| self.branch_currents[i])
    }
}
