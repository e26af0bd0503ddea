//! Dense-factor, sparse-storage linear programming.
//!
//! [`solve`] runs a two-phase bounded-variable revised simplex on a
//! maximization [`LinearProgram`]. Results carry the duals and a duality gap;
//! [`check_certificate`] recomputes both from scratch for independent
//! verification. [`mps`] writes (and reads back) fixed-format MPS for use
//! with external solvers.

mod certificate;
mod lu;
mod model;
pub mod mps;
mod simplex;

pub use certificate::{check_certificate, CertificateReport};
pub use model::{Constraint, LinearProgram, Sense};
pub use mps::export_mps;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration_limit",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Primal feasibility tolerance (absolute, scaled by the largest |rhs| when above 1).
    pub feas_tol: f64,
    /// Duality-gap tolerance, relative to `1 + |objective|`.
    pub opt_tol: f64,
    pub max_iters: usize,
    /// Pivots between fresh basis factorizations.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-9, opt_tol: 1e-8, max_iters: 10_000_000, refactor_interval: 100, bland_after: 50 }
    }
}

/// Output of [`solve`]. For non-optimal statuses the vectors hold the last
/// iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub primal: Vec<f64>,
    /// Row multipliers, one per constraint.
    pub dual: Vec<f64>,
    pub objective_value: f64,
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Solve `lp` (maximize). Infeasibility, unboundedness and the iteration
/// limit are reported through [`LpSolution::status`]; `Err` means the input
/// was malformed or the factorization broke down.
pub fn solve(lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution, LpError> {
    simplex::solve(lp, opts)
}
