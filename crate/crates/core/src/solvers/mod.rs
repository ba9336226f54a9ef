//! In-repo LP and conic solvers.

mod admm;
mod cones;
mod simplex;

pub use admm::{solve_conic, ConicSolution, ConicSettings};
pub use cones::{project_psd_svec, project_soc};
pub use simplex::{solve_lp, LpSolution};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    Numerical,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::MaxIter => "max-iter",
            Status::Numerical => "numerical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: Status,
    /// In the model's own sense, constant included.
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub seconds: f64,
}
