//! Worst-case CVaR over all couplings of the market and credit marginals.
//!
//! With the joint law `psi` on the M x N cells and a tilting measure `mu`,
//! the bound is the linear program
//!
//! ```text
//! max  sum L[m][n] mu[m][n] / (1 - alpha)
//! s.t. sum_n psi[m][n] = p[m],  sum_m psi[m][n] = q[n],
//!      sum mu = 1 - alpha,  0 <= mu <= psi.
//! ```
//!
//! The reduced form drops `psi`: any `mu >= 0` with row sums `<= p`, column
//! sums `<= q` and total `1 - alpha` extends to a coupling (see
//! [`extend_mu_to_psi`]), so both programs share the same optimum.

use serde::{Deserialize, Serialize};
use wrongway_lp::{check_certificate, solve, LinearProgram, LpSolution, Sense, SolveOptions, Status};

use crate::credit_model::LossSurface;
use crate::error::{CoreError, Result};
use crate::risk_measures::cvar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Full,
    #[default]
    Reduced,
    /// Solve both, check that they agree, return the reduced solution.
    Both,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Full => "full",
            Formulation::Reduced => "reduced",
            Formulation::Both => "both",
        }
    }
}

impl std::str::FromStr for Formulation {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Formulation::Full),
            "reduced" => Ok(Formulation::Reduced),
            "both" => Ok(Formulation::Both),
            other => Err(CoreError::Validation(format!("unknown formulation {other:?}; expected full, reduced or both"))),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CoreError::Validation(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Full program over `(psi, mu)`: variables are `psi` row-major then `mu`
/// row-major; rows are the M row marginals, N column marginals, the total
/// tilt and the MN caps `mu - psi <= 0`. The objective is `sum L mu`
/// (unscaled by `1/(1 - alpha)`).
pub fn build_full_lp(l: &LossSurface, alpha: f64) -> Result<LinearProgram> {
    check_alpha(alpha)?;
    let (m, n) = (l.num_market(), l.num_credit());
    let mn = m * n;
    let mut lp = LinearProgram::new(2 * mn);
    for (c, &v) in l.values().iter().enumerate() {
        lp.set_objective(mn + c, v);
    }
    for (i, &p) in l.market_probs().iter().enumerate() {
        lp.add_constraint((0..n).map(|j| (i * n + j, 1.0)).collect(), Sense::Eq, p);
    }
    for (j, &q) in l.credit_probs().iter().enumerate() {
        lp.add_constraint((0..m).map(|i| (i * n + j, 1.0)).collect(), Sense::Eq, q);
    }
    lp.add_constraint((mn..2 * mn).map(|c| (c, 1.0)).collect(), Sense::Eq, 1.0 - alpha);
    for c in 0..mn {
        lp.add_constraint(vec![(mn + c, 1.0), (c, -1.0)], Sense::Le, 0.0);
    }
    Ok(lp)
}

/// Reduced program over `mu` alone: M row caps, N column caps, total tilt.
pub fn build_reduced_lp(l: &LossSurface, alpha: f64) -> Result<LinearProgram> {
    check_alpha(alpha)?;
    let (m, n) = (l.num_market(), l.num_credit());
    let mut lp = LinearProgram::new(m * n);
    lp.set_objective_vec(l.values().to_vec()).map_err(|e| CoreError::Validation(e.to_string()))?;
    for (i, &p) in l.market_probs().iter().enumerate() {
        lp.add_constraint((0..n).map(|j| (i * n + j, 1.0)).collect(), Sense::Le, p);
    }
    for (j, &q) in l.credit_probs().iter().enumerate() {
        lp.add_constraint((0..m).map(|i| (i * n + j, 1.0)).collect(), Sense::Le, q);
    }
    lp.add_constraint((0..m * n).map(|c| (c, 1.0)).collect(), Sense::Eq, 1.0 - alpha);
    Ok(lp)
}

/// Complete `mu` (row-major, `p.len() x q.len()`) to a coupling:
/// `psi = mu + (p - r)(q - c)' / s` with `r`, `c` the row and column sums of
/// `mu` and `s = sum(p - r)`.
pub fn extend_mu_to_psi(mu: &[f64], p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (p.len(), q.len());
    if mu.len() != m * n {
        return Err(CoreError::Validation(format!("mu has {} cells, expected {m} x {n}", mu.len())));
    }
    if let Some(v) = mu.iter().find(|v| !(v.is_finite() && **v >= -1e-12)) {
        return Err(CoreError::Validation(format!("mu entry {v} is negative")));
    }
    let mut row_rem = p.to_vec();
    let mut col_rem = q.to_vec();
    for i in 0..m {
        for j in 0..n {
            let v = mu[i * n + j];
            row_rem[i] -= v;
            col_rem[j] -= v;
        }
    }
    for (what, rem) in [("row", &mut row_rem), ("column", &mut col_rem)] {
        for (i, r) in rem.iter_mut().enumerate() {
            if *r < -1e-12 {
                return Err(CoreError::Validation(format!("mu {what} {i} exceeds its marginal by {}", -*r)));
            }
            *r = r.max(0.0);
        }
    }
    let s: f64 = row_rem.iter().sum();
    let mut psi: Vec<f64> = mu.iter().map(|v| v.max(0.0)).collect();
    if s <= 0.0 {
        return Ok(psi);
    }
    for i in 0..m {
        if row_rem[i] == 0.0 {
            continue;
        }
        let a = row_rem[i] / s;
        for j in 0..n {
            psi[i * n + j] += a * col_rem[j];
        }
    }
    Ok(psi)
}

/// Fill cells in decreasing loss order, each up to the smallest of its
/// remaining row cap, column cap and the remaining total `1 - alpha`.
/// Feasible for the reduced program; its value is a lower bound on the
/// optimum.
pub fn greedy_upper_start(l: &LossSurface, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let n = l.num_credit();
    let values = l.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut row_cap = l.market_probs().to_vec();
    let mut col_cap = l.credit_probs().to_vec();
    let mut left = 1.0 - alpha;
    let mut mu = vec![0.0; values.len()];
    for c in order {
        if left <= 0.0 {
            break;
        }
        let (i, j) = (c / n, c % n);
        let take = row_cap[i].min(col_cap[j]).min(left);
        if take > 0.0 {
            mu[c] = take;
            row_cap[i] -= take;
            col_cap[j] -= take;
            left -= take;
        }
    }
    Ok(mu)
}

/// Solver and certificate figures attached to a worst-case coupling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub status: String,
    pub iterations: usize,
    /// Solver-reported duality gap (objective units of `sum L mu`).
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_infeasibility: f64,
    /// Gap recomputed by the independent certificate checker.
    pub certificate_gap: f64,
    pub certificate_residual: f64,
    /// |full - reduced| in CVaR units when both were solved.
    pub agreement_gap: Option<f64>,
    /// CVaR of the greedy start, a lower bound on the optimum.
    pub greedy_cvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseCoupling {
    pub rows: usize,
    pub cols: usize,
    /// Joint probabilities, row-major.
    pub psi: Vec<f64>,
    /// Tilting measure, row-major.
    pub mu: Vec<f64>,
    pub alpha: f64,
    pub wcc_cvar: f64,
    pub formulation: Formulation,
    pub certificate: SolveSummary,
}

impl WorstCaseCoupling {
    /// Cells with `psi > 0` or `mu > 0`.
    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.psi.len()).filter(|&c| self.psi[c] > 0.0 || self.mu[c] > 0.0).map(|c| (c / self.cols, c % self.cols)).collect()
    }

    /// Cells where the tilting measure is above `tol`.
    pub fn mu_support(&self, tol: f64) -> Vec<(usize, usize)> {
        (0..self.mu.len()).filter(|&c| self.mu[c] > tol).map(|c| (c / self.cols, c % self.cols)).collect()
    }
}

fn run_lp(lp: &LinearProgram, opts: &SolveOptions, what: &str) -> Result<LpSolution> {
    let sol = solve(lp, opts).map_err(|e| CoreError::Solver(format!("{what} program: {e}")))?;
    if sol.status != Status::Optimal {
        return Err(CoreError::Solver(format!(
            "{what} program ended {} after {} iterations (primal residual {:.3e}, gap {:.3e})",
            sol.status, sol.iterations, sol.primal_residual, sol.duality_gap
        )));
    }
    Ok(sol)
}

fn tilt_value(l: &LossSurface, mu: &[f64], alpha: f64) -> f64 {
    l.values().iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() / (1.0 - alpha)
}

fn summary(lp: &LinearProgram, sol: &LpSolution, greedy_cvar: f64) -> SolveSummary {
    let cert = check_certificate(lp, &sol.primal, &sol.dual);
    SolveSummary {
        status: sol.status.to_string(),
        iterations: sol.iterations,
        duality_gap: sol.duality_gap,
        primal_residual: sol.primal_residual,
        dual_infeasibility: sol.dual_infeasibility,
        certificate_gap: cert.gap,
        certificate_residual: cert.primal_residual(),
        agreement_gap: None,
        greedy_cvar,
    }
}

pub fn solve_wcc(l: &LossSurface, alpha: f64, formulation: Formulation) -> Result<WorstCaseCoupling> {
    solve_wcc_with(l, alpha, formulation, &SolveOptions::default())
}

pub fn solve_wcc_with(l: &LossSurface, alpha: f64, formulation: Formulation, opts: &SolveOptions) -> Result<WorstCaseCoupling> {
    check_alpha(alpha)?;
    let mn = l.num_market() * l.num_credit();
    let greedy_cvar = tilt_value(l, &greedy_upper_start(l, alpha)?, alpha);

    let full = |l: &LossSurface| -> Result<WorstCaseCoupling> {
        let lp = build_full_lp(l, alpha)?;
        let sol = run_lp(&lp, opts, "full")?;
        let psi: Vec<f64> = sol.primal[..mn].iter().map(|v| v.max(0.0)).collect();
        let mu: Vec<f64> = sol.primal[mn..].iter().map(|v| v.max(0.0)).collect();
        Ok(WorstCaseCoupling {
            rows: l.num_market(),
            cols: l.num_credit(),
            wcc_cvar: tilt_value(l, &mu, alpha),
            psi,
            mu,
            alpha,
            formulation: Formulation::Full,
            certificate: summary(&lp, &sol, greedy_cvar),
        })
    };
    let reduced = |l: &LossSurface| -> Result<WorstCaseCoupling> {
        let lp = build_reduced_lp(l, alpha)?;
        let sol = run_lp(&lp, opts, "reduced")?;
        let mu: Vec<f64> = sol.primal.iter().map(|v| v.max(0.0)).collect();
        let psi = extend_mu_to_psi(&mu, l.market_probs(), l.credit_probs())?;
        Ok(WorstCaseCoupling {
            rows: l.num_market(),
            cols: l.num_credit(),
            wcc_cvar: tilt_value(l, &mu, alpha),
            psi,
            mu,
            alpha,
            formulation: Formulation::Reduced,
            certificate: summary(&lp, &sol, greedy_cvar),
        })
    };

    match formulation {
        Formulation::Full => full(l),
        Formulation::Reduced => reduced(l),
        Formulation::Both => {
            let f = full(l)?;
            let mut r = reduced(l)?;
            let gap = (f.wcc_cvar - r.wcc_cvar).abs();
            if gap > 1e-8 * l.scale() {
                return Err(CoreError::Solver(format!(
                    "full and reduced programs disagree: {} vs {} (gap {gap:.3e})",
                    f.wcc_cvar, r.wcc_cvar
                )));
            }
            r.formulation = Formulation::Both;
            r.certificate.agreement_gap = Some(gap);
            Ok(r)
        }
    }
}

/// CVaR of the loss law induced by an arbitrary coupling `psi`.
pub fn coupling_cvar(l: &LossSurface, psi: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(cvar(&l.law_under(psi)?, alpha))
}
