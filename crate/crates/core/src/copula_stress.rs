//! Gaussian-copula stress comparator.
//!
//! Market scenarios are sorted by total exposure and coupled to the credit
//! factor through a bivariate Gaussian copula. Positive correlation is the
//! wrong-way direction: the exposure rank is correlated with `-Z`, so high
//! exposure meets low credit-factor values.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credit_model::{norm_cdf, norm_ppf, CreditGrid, LossSurface};
use crate::error::{CoreError, Result};
use crate::portfolio_data::ExposureMatrix;
use crate::risk_measures::cvar;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn gl20() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// `P(X > dh, Y > dk)` for standard normals with correlation `r`, after
/// Genz's BVND (Drezner-Wesolowsky integral, 20-point Gauss-Legendre).
fn bvnd(dh: f64, dk: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    let rule = gl20();
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for &(x, w) in rule {
            let sn = (asr * (x + 1.0) / 2.0).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        // The rule integrates over [-1, 1]; half of asr/(2 pi) per unit.
        bvn = bvn * asr / (4.0 * PI) + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = (1.0 - r) * (1.0 + r);
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                bvn -= (-hk / 2.0).exp() * (2.0 * PI).sqrt() * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            let mut sum = 0.0;
            for &(x, w) in rule {
                let xs = (a * (x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    sum += w * asr.exp() * ((-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
            bvn += a * sum;
            bvn = -bvn / (2.0 * PI);
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else {
            bvn = -bvn;
            if k > h {
                bvn += norm_cdf(k) - norm_cdf(h);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X <= h, Y <= k)` for standard normals with correlation `r`.
/// Infinite limits reduce to the marginals; `|r| = 1` uses the comonotone
/// and antimonotone limits.
pub fn bivariate_normal_cdf(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return norm_cdf(k);
    }
    if k == f64::INFINITY {
        return norm_cdf(h);
    }
    if r >= 1.0 {
        return norm_cdf(h.min(k));
    }
    if r <= -1.0 {
        return (norm_cdf(h) - norm_cdf(-k)).max(0.0);
    }
    if r == 0.0 {
        return norm_cdf(h) * norm_cdf(k);
    }
    bvnd(-h, -k, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    #[default]
    TotalExposure,
}

/// Scenario indices in ascending order of the key, ties by index.
pub fn sort_scenarios(x: &ExposureMatrix, key: SortKey) -> Vec<usize> {
    let SortKey::TotalExposure = key;
    let totals = x.scenario_totals();
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(a.cmp(&b)));
    order
}

/// Prefix sums `0, p0, p0+p1, ..., 1` with the final entry pinned to 1.
fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(p.len() + 1);
    let mut acc = 0.0;
    c.push(0.0);
    for v in p {
        acc += v;
        c.push(acc);
    }
    *c.last_mut().expect("nonempty") = 1.0;
    c
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Joint probabilities (row-major, `sorted_p.len() x N`) of the Gaussian
/// copula with correlation `r` between the exposure rank and `-Z`.
/// Row `i` is the `i`-th scenario in sorted order.
pub fn copula_coupling(sorted_p: &[f64], grid: &CreditGrid, r: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(CoreError::Validation(format!("copula correlation must lie in [-1, 1], got {r}")));
    }
    let q = grid.cell_probs();
    let (m, n) = (sorted_p.len(), q.len());
    if r == 0.0 {
        return Ok(sorted_p.iter().flat_map(|&p| q.iter().map(move |&qn| p * qn)).collect());
    }
    let u = cumulative(sorted_p);
    if r.abs() == 1.0 {
        // Uniform-scale intervals of the credit cells, either in Phi(Z)
        // (r = -1, rank moves with Z) or in 1 - Phi(Z) (r = 1).
        let mut cells = vec![(0.0, 0.0); n];
        if r < 0.0 {
            let v = cumulative(q);
            for j in 0..n {
                cells[j] = (v[j], v[j + 1]);
            }
        } else {
            let mut acc = 0.0;
            for j in (0..n).rev() {
                cells[j] = (acc, acc + q[j]);
                acc += q[j];
            }
            cells[0].1 = 1.0;
        }
        let mut psi = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                psi[i * n + j] = overlap(u[i], u[i + 1], cells[j].0, cells[j].1);
            }
        }
        return Ok(psi);
    }
    let h: Vec<f64> = u.iter().map(|&v| norm_ppf(v)).collect();
    let z: Vec<f64> = std::iter::once(f64::NEG_INFINITY).chain(grid.interior_points().iter().copied()).chain(std::iter::once(f64::INFINITY)).collect();
    // Corr(rank, Z) = -r.
    let f: Vec<f64> = (0..=m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let hi = h[i];
            z.iter().map(move |&zj| bivariate_normal_cdf(hi, zj, -r)).collect::<Vec<_>>()
        })
        .collect();
    let w = n + 1;
    let mut psi = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let v = f[(i + 1) * w + j + 1] - f[i * w + j + 1] - f[(i + 1) * w + j] + f[i * w + j];
            psi[i * n + j] = v.max(0.0);
        }
    }
    Ok(psi)
}

/// Coupling in original scenario order: row `order[i]` receives sorted row `i`.
pub fn copula_coupling_ordered(l: &LossSurface, grid: &CreditGrid, order: &[usize], r: f64) -> Result<Vec<f64>> {
    let (m, n) = (l.num_market(), l.num_credit());
    if order.len() != m || grid.num_cells() != n {
        return Err(CoreError::Validation("scenario order or grid does not match the loss surface".into()));
    }
    let sorted_p: Vec<f64> = order.iter().map(|&s| l.market_probs()[s]).collect();
    let c = copula_coupling(&sorted_p, grid, r)?;
    let mut psi = vec![0.0; m * n];
    for (i, &s) in order.iter().enumerate() {
        psi[s * n..(s + 1) * n].copy_from_slice(&c[i * n..(i + 1) * n]);
    }
    Ok(psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Systematic,
    Total,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Systematic => "systematic",
            LossKind::Total => "total",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "systematic" => Ok(LossKind::Systematic),
            "total" => Ok(LossKind::Total),
            other => Err(CoreError::Validation(format!("unknown loss kind {other:?}; expected systematic or total"))),
        }
    }
}

/// CVaR of the copula comparator relative to the worst case, per correlation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCurve {
    pub alpha: f64,
    pub loss_kind: LossKind,
    pub correlations: Vec<f64>,
    pub comparator_cvar: Vec<f64>,
    pub wcc_cvar: f64,
    pub ratio: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl RatioCurve {
    pub(crate) fn from_parts(alpha: f64, loss_kind: LossKind, correlations: Vec<f64>, comparator_cvar: Vec<f64>, wcc_cvar: f64) -> Self {
        let ratio: Vec<f64> = comparator_cvar.iter().map(|c| c / wcc_cvar).collect();
        let min_ratio = ratio.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { alpha, loss_kind, correlations, comparator_cvar, wcc_cvar, ratio, min_ratio, max_ratio }
    }
}

/// Evenly spaced correlations from `lo` to `hi` inclusive.
pub fn correlation_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(lo <= hi) || lo < -1.0 || hi > 1.0 {
        return Err(CoreError::Validation(format!("bad correlation grid [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + i as f64 * step }).collect())
}

/// Systematic-loss ratio curve: for each `r`, couple the sorted scenarios
/// with the credit grid, take the CVaR of the coupled loss law, divide by
/// `wcc_cvar`. `order` is the scenario sort (see [`sort_scenarios`]).
pub fn ratio_curve(l: &LossSurface, grid: &CreditGrid, wcc_cvar: f64, alpha: f64, r_grid: &[f64], order: &[usize]) -> Result<RatioCurve> {
    if !(wcc_cvar > 0.0) {
        return Err(CoreError::Validation(format!("ratio curve needs a positive worst-case CVaR, got {wcc_cvar}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoreError::Validation(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let comparator: Vec<f64> = r_grid
        .par_iter()
        .map(|&r| {
            let psi = copula_coupling_ordered(l, grid, order, r)?;
            Ok(cvar(&l.law_under(&psi)?, alpha))
        })
        .collect::<Result<_>>()?;
    Ok(RatioCurve::from_parts(alpha, LossKind::Systematic, r_grid.to_vec(), comparator, wcc_cvar))
}
