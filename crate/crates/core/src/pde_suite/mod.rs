//! The benchmark problem suite: each case carries its exact grid, source,
//! boundary conditions, a direct-solve (or analytic) reference oracle, and the
//! error metrics it reports.

mod cases;
mod navier_stokes;
mod oracle;

pub use cases::{
    analytic_gaussian_cd, gaussian_source, run_convection_diffusion_case, run_diffusion_case,
    run_linear_system_case, run_poisson_case, CdScheme, GaussianCd, SolverOverrides,
};
pub use navier_stokes::{run_navier_stokes_case, vorticity, NsOptions, NsState};
pub use oracle::{
    dense_matrix_from_kernel, direct_sparse_oracle, linear_system_matrix, DirectSolver,
};

use std::collections::BTreeMap;

use crate::field::Field2D;

/// Everything a case reports: grid, parameters, scalar metrics, per-step or
/// per-cycle series, and field snapshots for inspection.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: String,
    /// (H, W, h)
    pub grid: (usize, usize, f64),
    pub parameters: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub snapshots: Vec<(String, Field2D)>,
    /// Step at which the run diverged (NaN/Inf), if it did.
    pub failed_at_step: Option<usize>,
}

impl CaseReport {
    pub fn new(name: impl Into<String>, grid: (usize, usize, f64)) -> Self {
        Self {
            name: name.into(),
            grid,
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            series: BTreeMap::new(),
            snapshots: Vec::new(),
            failed_at_step: None,
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn metrics_finite(&self) -> bool {
        self.metrics.values().all(|v| v.is_finite())
    }
}
