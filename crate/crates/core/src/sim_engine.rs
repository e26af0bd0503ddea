//! Monte Carlo losses under a discrete market/credit coupling.
//!
//! Each draw picks a cell `(m, n)` from the coupling, draws `Z` from the
//! standard normal restricted to credit cell `n`, and evaluates either the
//! systematic loss at that `Z` or the total loss with fresh idiosyncratic
//! draws. Draw `j` reads its variates from a ChaCha8 stream keyed by the seed
//! and `stream_id`, positioned at word `j << 24`, so results do not depend on
//! how draws are split across threads.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula_stress::{copula_coupling_ordered, gauss_legendre, LossKind, RatioCurve};
use crate::credit_model::{norm_cdf, norm_log_sf, norm_ppf, norm_sf, CreditGrid, DefaultModel, LossSurface};
use crate::error::{CoreError, Result};
use crate::portfolio_data::{align_counterparties, Counterparty, ExposureMatrix};
use crate::risk_measures::{empirical_cvar, empirical_var, DiscreteDistribution};

/// Words of stream reserved per draw.
const DRAW_STRIDE_BITS: u32 = 24;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_draws: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    pub stream_id: u64,
}

impl SimConfig {
    pub fn new(n_draws: usize, seed: u64, loss_kind: LossKind) -> Self {
        Self { n_draws, seed, loss_kind, stream_id: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(CoreError::Validation("n_draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// Generator for draw `j` of a stream.
#[derive(Debug, Clone)]
pub struct Substreams {
    base: ChaCha8Rng,
}

impl Substreams {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut base = ChaCha8Rng::seed_from_u64(seed);
        base.set_stream(stream_id);
        Self { base }
    }

    pub fn draw(&self, j: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos(u128::from(j) << DRAW_STRIDE_BITS);
        rng
    }
}

/// Vose alias table over the positive entries of a weight vector.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
    /// Original index of each table slot.
    index: Vec<usize>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= -1e-9)) {
            return Err(CoreError::Validation(format!("sampling weight {w} is negative or not finite")));
        }
        let index: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let n = index.len();
        if n == 0 {
            return Err(CoreError::Validation("sampling weights have no mass".into()));
        }
        if n > u32::MAX as usize {
            return Err(CoreError::Validation("too many cells for the alias table".into()));
        }
        let total: f64 = index.iter().map(|&i| weights[i]).sum();
        let mut scaled: Vec<f64> = index.iter().map(|&i| weights[i] * n as f64 / total).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        Ok(Self { prob, alias, index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let slot = rng.random_range(0..self.prob.len());
        let u: f64 = rng.random();
        let k = if u < self.prob[slot] { slot } else { self.alias[slot] as usize };
        self.index[k]
    }
}

/// Draw a cell `(m, n)` of a row-major coupling with `cols` columns.
pub fn sample_cell<R: Rng + ?Sized>(table: &AliasTable, cols: usize, rng: &mut R) -> (usize, usize) {
    let c = table.sample(rng);
    (c / cols, c % cols)
}

/// Standard normal restricted to `(a, b)` at uniform level `u`, by
/// inverting the distribution function on the side of zero the interval
/// lies on. Intervals whose tail mass underflows are inverted in log space.
pub fn truncated_normal_quantile(a: f64, b: f64, u: f64) -> f64 {
    let x = if a >= 0.0 {
        upper_tail_quantile(a, b, u)
    } else if b <= 0.0 {
        -upper_tail_quantile(-b, -a, 1.0 - u)
    } else {
        let ca = norm_cdf(a);
        norm_ppf(ca + u * (norm_cdf(b) - ca))
    };
    if x <= a {
        a.next_up()
    } else if x >= b {
        b.next_down()
    } else {
        x
    }
}

/// Quantile on `(a, b)` with `0 <= a`, using upper-tail probabilities.
fn upper_tail_quantile(a: f64, b: f64, u: f64) -> f64 {
    let sa = norm_sf(a);
    if sa > 1e-290 {
        let sb = norm_sf(b);
        return -norm_ppf(sa - u * (sa - sb));
    }
    let la = norm_log_sf(a);
    let lb = if b.is_finite() { norm_log_sf(b) } else { f64::NEG_INFINITY };
    let target = la + (-u * -(lb - la).exp_m1()).ln_1p();
    // Newton on the concave log tail; the hazard rate is its slope.
    let mut x = a.max((-2.0 * target).sqrt());
    for _ in 0..60 {
        let f = norm_log_sf(x) - target;
        let hazard = ((-0.5 * x * x) - 0.5 * (2.0 * std::f64::consts::PI).ln() - norm_log_sf(x)).exp();
        let step = f / hazard;
        x += step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}

/// One draw from the standard normal restricted to `(a, b)`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a < b) {
        return Err(CoreError::Validation(format!("truncation interval needs a < b, got ({a}, {b})")));
    }
    let u: f64 = rng.sample(Open01);
    Ok(truncated_normal_quantile(a, b, u))
}

fn check_dims(coupling: &[f64], x: &ExposureMatrix, grid: &CreditGrid) -> Result<()> {
    let want = x.num_scenarios() * grid.num_cells();
    if coupling.len() != want {
        return Err(CoreError::Validation(format!(
            "coupling has {} cells, expected {} x {}",
            coupling.len(),
            x.num_scenarios(),
            grid.num_cells()
        )));
    }
    Ok(())
}

/// Loss samples in draw order.
pub fn simulate_loss_samples(coupling: &[f64], x: &ExposureMatrix, cps: &[Counterparty], grid: &CreditGrid, cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_dims(coupling, x, grid)?;
    let cps = align_counterparties(x, cps)?;
    let model = DefaultModel::new(&cps);
    let table = AliasTable::new(coupling)?;
    let cols = grid.num_cells();
    let columns: Vec<Vec<f64>> = (0..x.num_scenarios()).map(|m| x.column(m)).collect();
    let streams = Substreams::new(cfg.seed, cfg.stream_id);
    let mut out = vec![0.0; cfg.n_draws];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        for (i, slot) in chunk.iter_mut().enumerate() {
            let j = (c * CHUNK + i) as u64;
            let mut rng = streams.draw(j);
            let (m, n) = sample_cell(&table, cols, &mut rng);
            let (a, b) = grid.cell_bounds(n);
            let u: f64 = rng.sample(Open01);
            let z = truncated_normal_quantile(a, b, u);
            let y = &columns[m];
            *slot = match cfg.loss_kind {
                LossKind::Systematic => model.systematic_loss(y, z),
                LossKind::Total => model.total_loss(y, z, |_| rng.sample(StandardNormal)),
            };
        }
    });
    Ok(out)
}

/// Empirical loss distribution (equal weights) of `cfg.n_draws` draws.
pub fn simulate_losses(coupling: &[f64], x: &ExposureMatrix, cps: &[Counterparty], grid: &CreditGrid, cfg: &SimConfig) -> Result<DiscreteDistribution> {
    DiscreteDistribution::uniform(simulate_loss_samples(coupling, x, cps, grid, cfg)?)
}

/// Total-loss ratio curve by simulation. The worst-case coupling `wcc_psi`
/// and every copula coupling are simulated with the same `cfg` (common
/// random numbers); ratios are empirical CVaRs. Unlike the systematic curve,
/// these ratios are not bounded by 1: the worst-case coupling maximizes the
/// systematic loss, not the total.
#[allow(clippy::too_many_arguments)]
pub fn total_ratio_curve(
    wcc_psi: &[f64],
    l: &LossSurface,
    x: &ExposureMatrix,
    cps: &[Counterparty],
    grid: &CreditGrid,
    alpha: f64,
    r_grid: &[f64],
    order: &[usize],
    cfg: &SimConfig,
) -> Result<RatioCurve> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoreError::Validation(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let cfg = SimConfig { loss_kind: LossKind::Total, ..cfg.clone() };
    let tail = |psi: &[f64]| -> Result<f64> {
        let mut s = simulate_loss_samples(psi, x, cps, grid, &cfg)?;
        Ok(empirical_cvar(&mut s, alpha))
    };
    let worst = tail(wcc_psi)?;
    if !(worst > 0.0) {
        return Err(CoreError::Validation(format!("simulated worst-case total CVaR is {worst}; ratios undefined")));
    }
    let comparator = r_grid
        .iter()
        .map(|&r| tail(&copula_coupling_ordered(l, grid, order, r)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioCurve::from_parts(alpha, LossKind::Total, r_grid.to_vec(), comparator, worst))
}

/// Bootstrap standard error of the empirical CVaR: `resamples` resamples
/// with replacement, each drawn from its own substream of `seed`.
pub fn bootstrap_cvar_se(samples: &[f64], alpha: f64, resamples: usize, seed: u64) -> f64 {
    let n = samples.len();
    if n < 2 || resamples < 2 {
        return f64::NAN;
    }
    let streams = Substreams::new(seed, u64::MAX);
    let stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = streams.draw(b as u64);
            let mut buf: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            empirical_cvar(&mut buf, alpha)
        })
        .collect();
    let mean = stats.iter().sum::<f64>() / resamples as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailStats {
    pub alpha: f64,
    pub var: f64,
    pub cvar: f64,
    /// Bootstrap standard error of `cvar`; `None` with fewer than two draws.
    pub cvar_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub n_draws: usize,
    pub mean: f64,
    /// Sample variance; `None` with fewer than two draws.
    pub variance: Option<f64>,
    pub mean_se: Option<f64>,
    /// Set when there are too few draws for dispersion estimates.
    pub degenerate: bool,
    pub tails: Vec<TailStats>,
}

pub fn summarize(samples: &[f64], alphas: &[f64], resamples: usize, seed: u64) -> Result<SimSummary> {
    let n = samples.len();
    if n == 0 {
        return Err(CoreError::Validation("no samples to summarize".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(CoreError::Validation(format!("alpha must lie in (0, 1), got {a}")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let degenerate = n < 2;
    let variance = (!degenerate).then(|| samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64);
    let tails = alphas
        .iter()
        .map(|&alpha| {
            let mut buf = samples.to_vec();
            let var = empirical_var(&mut buf, alpha);
            let cvar = empirical_cvar(&mut buf, alpha);
            let cvar_se = (!degenerate).then(|| bootstrap_cvar_se(samples, alpha, resamples, seed));
            TailStats { alpha, var, cvar, cvar_se }
        })
        .collect();
    Ok(SimSummary { n_draws: n, mean, variance, mean_se: variance.map(|v| (v / n as f64).sqrt()), degenerate, tails })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizationReport {
    /// `sum psi |L(rep) - E[L(Z) | cell]|`.
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
}

/// Gap between losses evaluated at the cell representatives (as in the loss
/// surface) and their conditional expectations over each cell, which is what
/// simulation with in-cell `Z` targets.
pub fn discretization_diagnostic(coupling: &[f64], l: &LossSurface, x: &ExposureMatrix, cps: &[Counterparty], grid: &CreditGrid) -> Result<DiscretizationReport> {
    check_dims(coupling, x, grid)?;
    let cps = align_counterparties(x, cps)?;
    let model = DefaultModel::new(&cps);
    let n = grid.num_cells();
    let nodes = gauss_legendre(16);
    // E[cpd_k(Z) | cell] through u = Phi(Z) on each cell's probability range.
    let cond: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let (a, b) = grid.cell_bounds(j);
            let (ua, ub) = (norm_cdf(a), norm_cdf(b));
            let half = 0.5 * (ub - ua);
            let mut acc = vec![0.0; cps.len()];
            for &(t, w) in &nodes {
                let z = norm_ppf(ua + half * (t + 1.0)).clamp(a.next_up(), b.next_down());
                for (k, slot) in acc.iter_mut().enumerate() {
                    *slot += 0.5 * w * model.weighted_pd(k, z);
                }
            }
            acc
        })
        .collect();
    let mut mean_abs_error = 0.0;
    let mut max_abs_error = 0.0f64;
    for m in 0..x.num_scenarios() {
        let y = x.column(m);
        for j in 0..n {
            let w = coupling[m * n + j];
            if w <= 0.0 {
                continue;
            }
            let expected: f64 = y.iter().zip(&cond[j]).map(|(y, c)| y * c).sum();
            let err = (l.get(m, j) - expected).abs();
            mean_abs_error += w * err;
            max_abs_error = max_abs_error.max(err);
        }
    }
    Ok(DiscretizationReport { mean_abs_error, max_abs_error })
}
