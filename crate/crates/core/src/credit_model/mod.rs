//! Single-factor Gaussian copula credit model.
//!
//! Counterparty `k` defaults when its creditworthiness index
//! `sqrt(rho_k) Z + sqrt(1 - rho_k) eps_k` falls below `Phi^{-1}(pd_k)`.
//! Integrating out `eps_k` gives the conditional default probability used
//! for systematic losses.

mod normal;

pub use normal::{norm_cdf, norm_cdf_both, norm_inv, norm_isf, norm_log_sf, norm_pdf, norm_ppf, norm_sf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::numeric::close_to_unit_sum;
use crate::portfolio_data::{align_counterparties, Counterparty, ExposureMatrix};
use crate::risk_measures::DiscreteDistribution;

/// Discretization of the systematic factor `Z` into N cells. The outer cells
/// run to -inf and +inf; the N-1 finite boundaries split `[z_lo, z_hi]` into
/// N equal widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreditGrid {
    interior: Vec<f64>,
    probs: Vec<f64>,
    reps: Vec<f64>,
}

impl CreditGrid {
    pub fn num_cells(&self) -> usize {
        self.probs.len()
    }

    pub fn interior_points(&self) -> &[f64] {
        &self.interior
    }

    pub fn cell_probs(&self) -> &[f64] {
        &self.probs
    }

    /// Conditional mean of `Z` within each cell.
    pub fn cell_reps(&self) -> &[f64] {
        &self.reps
    }

    /// Boundaries `(a, b)` of cell `n`, infinite for the outer cells.
    pub fn cell_bounds(&self, n: usize) -> (f64, f64) {
        let a = if n == 0 { f64::NEG_INFINITY } else { self.interior[n - 1] };
        let b = if n == self.interior.len() { f64::INFINITY } else { self.interior[n] };
        (a, b)
    }
}

/// Standard normal mass of `(a, b)`, differenced on the side of zero where
/// the distribution function keeps its relative precision.
pub fn normal_interval_mass(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

pub fn build_credit_grid(n_cells: usize, z_lo: f64, z_hi: f64) -> Result<CreditGrid> {
    if n_cells < 1 {
        return Err(CoreError::Validation("credit grid needs at least one cell".into()));
    }
    if !(z_lo.is_finite() && z_hi.is_finite() && z_lo < z_hi) {
        return Err(CoreError::Validation(format!("credit grid needs finite z_lo < z_hi, got [{z_lo}, {z_hi}]")));
    }
    let width = (z_hi - z_lo) / n_cells as f64;
    let interior: Vec<f64> = (1..n_cells).map(|j| z_lo + j as f64 * width).collect();
    if interior.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::Validation("credit grid boundaries are not strictly increasing".into()));
    }
    let mut grid = CreditGrid { interior, probs: Vec::new(), reps: Vec::new() };
    let mut probs = Vec::with_capacity(n_cells);
    let mut reps = Vec::with_capacity(n_cells);
    for n in 0..n_cells {
        let (a, b) = grid.cell_bounds(n);
        let q = normal_interval_mass(a, b);
        probs.push(q);
        reps.push((norm_pdf(a) - norm_pdf(b)) / q);
    }
    close_to_unit_sum(&mut probs);
    if let Some(n) = probs.iter().position(|q| !(*q > 0.0)) {
        return Err(CoreError::Validation(format!("credit cell {n} has no probability mass; widen or coarsen the grid")));
    }
    grid.probs = probs;
    grid.reps = reps;
    Ok(grid)
}

/// Per-counterparty constants for `Phi((Phi^{-1}(pd) - sqrt(rho) z) / sqrt(1 - rho))`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    pd: f64,
    threshold: f64,
    sqrt_rho: f64,
    sqrt_idio: f64,
}

impl Kernel {
    fn new(cp: &Counterparty) -> Self {
        Self { pd: cp.pd, threshold: norm_ppf(cp.pd), sqrt_rho: cp.rho.sqrt(), sqrt_idio: (1.0 - cp.rho).sqrt() }
    }

    fn eval(&self, z: f64) -> f64 {
        if self.sqrt_rho == 0.0 {
            return self.pd;
        }
        norm_cdf((self.threshold - self.sqrt_rho * z) / self.sqrt_idio)
    }
}

/// Default probability of `cp` given the systematic factor `Z = z`.
pub fn conditional_pd(cp: &Counterparty, z: f64) -> f64 {
    Kernel::new(cp).eval(z)
}

/// Systematic losses `L[m][n]` per market scenario and credit cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossSurface {
    rows: usize,
    cols: usize,
    /// Row-major M x N.
    values: Vec<f64>,
    market_probs: Vec<f64>,
    credit_probs: Vec<f64>,
}

impl LossSurface {
    /// `values` is row-major `p.len() x q.len()`.
    pub fn new(values: Vec<f64>, market_probs: Vec<f64>, credit_probs: Vec<f64>) -> Result<Self> {
        let (m, n) = (market_probs.len(), credit_probs.len());
        if m == 0 || n == 0 || values.len() != m * n {
            return Err(CoreError::Validation(format!("loss surface of {} values does not match {m} x {n} marginals", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CoreError::Validation(format!("loss value {v} is not finite")));
        }
        // Borrow the probability checks from the distribution type.
        DiscreteDistribution::new(vec![0.0; m], market_probs.clone())?;
        DiscreteDistribution::new(vec![0.0; n], credit_probs.clone())?;
        Ok(Self { rows: m, cols: n, values, market_probs, credit_probs })
    }

    /// Build from `f(m, n)`.
    pub fn from_fn(market_probs: Vec<f64>, credit_probs: Vec<f64>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = credit_probs.len();
        let values = (0..market_probs.len() * n).map(|i| f(i / n, i % n)).collect();
        Self::new(values, market_probs, credit_probs)
    }

    pub fn num_market(&self) -> usize {
        self.rows
    }

    pub fn num_credit(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m * self.cols + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.cols..(m + 1) * self.cols]
    }

    pub fn market_probs(&self) -> &[f64] {
        &self.market_probs
    }

    pub fn credit_probs(&self) -> &[f64] {
        &self.credit_probs
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `1 + max |L|`, the scale used for absolute tolerances.
    pub fn scale(&self) -> f64 {
        1.0 + self.max_abs()
    }

    /// Loss law when the cells carry the joint probabilities `psi`
    /// (row-major, same shape).
    pub fn law_under(&self, psi: &[f64]) -> Result<DiscreteDistribution> {
        if psi.len() != self.values.len() {
            return Err(CoreError::Validation("coupling shape does not match the loss surface".into()));
        }
        DiscreteDistribution::from_weights(self.values.clone(), psi)
    }

    /// Multiply every loss by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect(), ..self.clone() }
    }
}

/// `L[m][n] = sum_k lgd_k y[k][m] P(default_k | Z = rep_n)`.
pub fn systematic_loss_surface(x: &ExposureMatrix, cps: &[Counterparty], grid: &CreditGrid) -> Result<LossSurface> {
    let cps = align_counterparties(x, cps)?;
    let reps = grid.cell_reps();
    let n = reps.len();
    // cpd[k][n]
    let cpd: Vec<Vec<f64>> = cps
        .iter()
        .map(|cp| {
            let kern = Kernel::new(cp);
            reps.iter().map(|&z| kern.eval(z)).collect()
        })
        .collect();
    let m_count = x.num_scenarios();
    let mut values = vec![0.0; m_count * n];
    values.par_chunks_mut(n).enumerate().for_each(|(m, row)| {
        for (k, cp) in cps.iter().enumerate() {
            let y = x.get(k, m);
            if y == 0.0 {
                continue;
            }
            for (l, c) in row.iter_mut().zip(&cpd[k]) {
                *l += cp.lgd * y * c;
            }
        }
    });
    LossSurface::new(values, x.probs().to_vec(), grid.cell_probs().to_vec())
}

/// Creditworthiness index `sqrt(rho) z + sqrt(1 - rho) eps`.
pub fn cwi(z: f64, eps: f64, rho: f64) -> f64 {
    rho.sqrt() * z + (1.0 - rho).sqrt() * eps
}

/// Whether a counterparty with index value `cwi` and default probability
/// `pd` is in default.
pub fn is_default(cwi: f64, pd: f64) -> bool {
    cwi <= norm_ppf(pd)
}

/// Loss in one market scenario given the systematic draw `z` and the
/// idiosyncratic draws `eps`: `sum_k lgd_k y_k 1{cwi_k <= Phi^{-1}(pd_k)}`.
pub fn total_loss(y_col: &[f64], cps: &[Counterparty], z: f64, eps: &[f64]) -> Result<f64> {
    if y_col.len() != cps.len() || eps.len() != cps.len() {
        return Err(CoreError::Validation(format!(
            "total_loss needs matching lengths, got {} exposures, {} counterparties, {} draws",
            y_col.len(),
            cps.len(),
            eps.len()
        )));
    }
    Ok(y_col
        .iter()
        .zip(cps)
        .zip(eps)
        .filter(|((_, cp), &e)| is_default(cwi(z, e, cp.rho), cp.pd))
        .map(|((y, cp), _)| cp.lgd * y)
        .sum())
}

/// Precomputed default thresholds and loadings for repeated
/// [`total_loss`]-style evaluation.
#[derive(Debug, Clone)]
pub struct DefaultModel {
    thresholds: Vec<f64>,
    sqrt_rho: Vec<f64>,
    sqrt_idio: Vec<f64>,
    lgd: Vec<f64>,
    kernels: Vec<Kernel>,
}

impl DefaultModel {
    pub fn new(cps: &[Counterparty]) -> Self {
        Self {
            thresholds: cps.iter().map(|c| norm_ppf(c.pd)).collect(),
            sqrt_rho: cps.iter().map(|c| c.rho.sqrt()).collect(),
            sqrt_idio: cps.iter().map(|c| (1.0 - c.rho).sqrt()).collect(),
            lgd: cps.iter().map(|c| c.lgd).collect(),
            kernels: cps.iter().map(Kernel::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lgd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lgd.is_empty()
    }

    /// Total loss with explicit idiosyncratic draws `eps(k)`.
    pub fn total_loss(&self, y_col: &[f64], z: f64, mut eps: impl FnMut(usize) -> f64) -> f64 {
        let mut loss = 0.0;
        for k in 0..self.len() {
            let e = eps(k);
            if self.sqrt_rho[k] * z + self.sqrt_idio[k] * e <= self.thresholds[k] {
                loss += self.lgd[k] * y_col[k];
            }
        }
        loss
    }

    /// `lgd_k P(default_k | Z = z)`.
    pub fn weighted_pd(&self, k: usize, z: f64) -> f64 {
        self.lgd[k] * self.kernels[k].eval(z)
    }

    /// Loss with the idiosyncratic draws integrated out.
    pub fn systematic_loss(&self, y_col: &[f64], z: f64) -> f64 {
        (0..self.len()).map(|k| self.lgd[k] * y_col[k] * self.kernels[k].eval(z)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselInputs {
    pub ead: f64,
    pub lgd: f64,
    pub pd: f64,
    pub rho: f64,
    pub maturity_adjustment: f64,
    pub tail_level: f64,
}

impl BaselInputs {
    /// Inputs with `MA = 1` and the 99.9% tail level.
    pub fn new(ead: f64, lgd: f64, pd: f64, rho: f64) -> Self {
        Self { ead, lgd, pd, rho, maturity_adjustment: 1.0, tail_level: 0.999 }
    }
}

/// `EAD LGD Phi((Phi^{-1}(PD) + sqrt(rho) Phi^{-1}(tail)) / sqrt(1 - rho)) MA`.
pub fn basel_capital(b: &BaselInputs) -> Result<f64> {
    let dom = |msg: String| Err(CoreError::Domain(msg));
    if !(b.rho >= 0.0 && b.rho < 1.0) {
        return dom(format!("rho must lie in [0, 1), got {}", b.rho));
    }
    if !(b.pd > 0.0 && b.pd < 1.0) || !(b.tail_level > 0.0 && b.tail_level < 1.0) {
        return dom(format!("pd and tail level must lie in (0, 1), got {} and {}", b.pd, b.tail_level));
    }
    if !(b.ead >= 0.0 && (0.0..=1.0).contains(&b.lgd) && b.maturity_adjustment > 0.0) {
        return dom("need ead >= 0, lgd in [0, 1] and a positive maturity adjustment".into());
    }
    let arg = (norm_ppf(b.pd) + b.rho.sqrt() * norm_ppf(b.tail_level)) / (1.0 - b.rho).sqrt();
    Ok(b.ead * b.lgd * norm_cdf(arg) * b.maturity_adjustment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_and_two_cell_grids() {
        let g = build_credit_grid(1, -5.0, 5.0).unwrap();
        assert_eq!(g.cell_probs(), &[1.0]);
        assert_eq!(g.cell_reps(), &[0.0]);
        let g = build_credit_grid(2, -5.0, 5.0).unwrap();
        assert_eq!(g.interior_points(), &[0.0]);
        assert_eq!(g.cell_probs(), &[0.5, 0.5]);
        assert!((g.cell_reps()[1] - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(build_credit_grid(0, -5.0, 5.0).is_err());
        assert!(build_credit_grid(3, 5.0, -5.0).is_err());
        assert!(build_credit_grid(3, f64::NEG_INFINITY, 5.0).is_err());
    }

    #[test]
    fn zero_loading_keeps_pd() {
        let cp = Counterparty::new("a", 0.5, 0.0).unwrap();
        for z in [-3.0, 0.0, 4.0] {
            assert_eq!(conditional_pd(&cp, z), 0.5);
        }
        let cp = Counterparty::new("a", 0.5, 0.5).unwrap();
        assert_eq!(conditional_pd(&cp, 0.0), 0.5);
    }

    #[test]
    fn cwi_examples() {
        assert_eq!(cwi(2.0, 0.0, 0.25), 1.0);
        assert_eq!(cwi(3.7, -0.4, 0.0), -0.4);
    }

    #[test]
    fn basel_rho_one_is_a_domain_error() {
        let mut b = BaselInputs::new(1.0, 1.0, 0.01, 0.2);
        b.rho = 1.0;
        assert!(basel_capital(&b).is_err());
    }
}
