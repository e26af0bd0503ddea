//! Independent optimality check.
//!
//! Recomputes primal residuals and a Lagrangian dual bound directly from the
//! row storage of the [`LinearProgram`]. Nothing here shares code with the
//! solver, so it can be used as the oracle for solver output.

use crate::model::{LinearProgram, Sense};

/// Residuals and gap recomputed for a primal/dual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Largest violation of any row (by its sense).
    pub max_row_violation: f64,
    /// Largest violation of any variable bound.
    pub max_bound_violation: f64,
    /// Largest wrong-signed reduced cost on an infinite bound, or wrong-signed
    /// row multiplier.
    pub dual_infeasibility: f64,
    pub primal_objective: f64,
    /// `b'y + sum_j sup_{x_j in [lo_j, hi_j]} (c_j - y'A_j) x_j`, with
    /// unbounded terms dropped (they are counted in `dual_infeasibility`).
    pub dual_objective: f64,
    /// `dual_objective - primal_objective`.
    pub gap: f64,
    /// Index of the worst row, when any row is violated.
    pub worst_row: Option<usize>,
}

impl CertificateReport {
    pub fn primal_residual(&self) -> f64 {
        self.max_row_violation.max(self.max_bound_violation)
    }

    /// Primal feasible within `feas_tol`, dual feasible within `feas_tol`, and
    /// gap at most `opt_tol * (1 + |objective|)`.
    pub fn is_optimal(&self, feas_tol: f64, opt_tol: f64) -> bool {
        self.primal_residual() <= feas_tol
            && self.dual_infeasibility <= feas_tol
            && self.gap.abs() <= opt_tol * (1.0 + self.primal_objective.abs())
    }
}

/// Check `primal` (length `num_vars`) and `dual` (length `num_constraints`)
/// against `lp`.
pub fn check_certificate(lp: &LinearProgram, primal: &[f64], dual: &[f64]) -> CertificateReport {
    assert_eq!(primal.len(), lp.num_vars(), "primal length");
    assert_eq!(dual.len(), lp.num_constraints(), "dual length");

    let mut max_row_violation = 0.0f64;
    let mut worst_row = None;
    let mut dual_infeasibility = 0.0f64;
    let mut dual_objective = 0.0;
    // Accumulate y'A column by column while walking the rows.
    let mut ya = vec![0.0; lp.num_vars()];

    for (i, row) in lp.constraints().iter().enumerate() {
        let activity: f64 = row.coeffs.iter().map(|&(j, a)| a * primal[j]).sum();
        let slack = row.rhs - activity;
        let violation = match row.sense {
            Sense::Le => (-slack).max(0.0),
            Sense::Ge => slack.max(0.0),
            Sense::Eq => slack.abs(),
        };
        if violation > max_row_violation {
            max_row_violation = violation;
            worst_row = Some(i);
        }
        let y = dual[i];
        // Maximization: a <= row needs y >= 0, a >= row needs y <= 0.
        match row.sense {
            Sense::Le => dual_infeasibility = dual_infeasibility.max(-y),
            Sense::Ge => dual_infeasibility = dual_infeasibility.max(y),
            Sense::Eq => {}
        }
        dual_objective += row.rhs * y;
        for &(j, a) in &row.coeffs {
            ya[j] += a * y;
        }
    }

    let mut max_bound_violation = 0.0f64;
    let mut primal_objective = 0.0;
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        let x = primal[j];
        max_bound_violation = max_bound_violation.max(lo - x).max(x - hi);
        let c = lp.objective()[j];
        primal_objective += c * x;
        let d = c - ya[j];
        if d > 0.0 {
            if hi == f64::INFINITY {
                dual_infeasibility = dual_infeasibility.max(d);
            } else {
                dual_objective += d * hi;
            }
        } else if d < 0.0 {
            if lo == f64::NEG_INFINITY {
                dual_infeasibility = dual_infeasibility.max(-d);
            } else {
                dual_objective += d * lo;
            }
        }
    }

    CertificateReport {
        max_row_violation,
        max_bound_violation,
        dual_infeasibility,
        primal_objective,
        dual_objective,
        gap: dual_objective - primal_objective,
        worst_row,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> LinearProgram {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 2.0);
        lp.set_bounds(0, 0.0, 1.0);
        lp.set_bounds(1, 0.0, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        lp
    }

    #[test]
    fn hand_certificate_has_zero_gap() {
        // x = (0, 1); y = 1 prices x0 at d = 0, x1 at d = 1 (at its upper bound).
        let report = check_certificate(&two_var(), &[0.0, 1.0], &[1.0]);
        assert_eq!(report.primal_residual(), 0.0);
        assert_eq!(report.dual_infeasibility, 0.0);
        assert!((report.gap).abs() < 1e-15);
        assert!(report.is_optimal(1e-9, 1e-8));
    }

    #[test]
    fn perturbed_primal_is_reported() {
        let report = check_certificate(&two_var(), &[1e-3, 1.0], &[1.0]);
        assert!((report.max_row_violation - 1e-3).abs() < 1e-15);
        assert_eq!(report.worst_row, Some(0));
        assert!(!report.is_optimal(1e-9, 1e-8));
    }

    #[test]
    fn suboptimal_dual_shows_positive_gap() {
        let report = check_certificate(&two_var(), &[0.0, 1.0], &[3.0]);
        assert!(report.gap > 0.5);
    }
}
