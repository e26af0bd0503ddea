//! Seeded synthetic portfolios for examples, tests and benchmarks.
//!
//! Exposures are driven by a few market factors (think rates, FX, equity)
//! with signed loadings, since a book can be long or short each factor:
//! `y[k][m] = size_k max(0, drift_k + beta_k . X_m + sigma_k eta_km)` with
//! `X_m`, `eta_km` standard normal. Total exposure therefore ranks the
//! scenarios only approximately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::portfolio_data::{Counterparty, ExposureMatrix};

const FACTORS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPortfolio {
    pub exposures: ExposureMatrix,
    pub counterparties: Vec<Counterparty>,
}

/// `k` counterparties over `m` equally likely scenarios.
pub fn synthetic_portfolio(k: usize, m: usize, seed: u64) -> Result<SyntheticPortfolio> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let market: Vec<[f64; FACTORS]> = (0..m).map(|_| std::array::from_fn(|_| rng.sample(StandardNormal))).collect();
    let mut ids = Vec::with_capacity(k);
    let mut rows = Vec::with_capacity(k);
    let mut cps = Vec::with_capacity(k);
    for i in 0..k {
        let id = format!("CP{:03}", i + 1);
        // Heavy-tailed sizes give a realistic concentration profile.
        let size = (1.2 * rng.sample::<f64, _>(StandardNormal)).exp() * 1e6;
        let drift: f64 = rng.random_range(0.0..0.8);
        let scale: f64 = rng.random_range(0.3..1.0);
        // Mostly long the first factor, mixed on the others.
        let mut beta: [f64; FACTORS] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        beta[0] = beta[0].abs() + 1.0;
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        beta.iter_mut().for_each(|b| *b *= scale / norm);
        let sigma: f64 = rng.random_range(0.2..0.8);
        let row: Vec<f64> = market
            .iter()
            .map(|x| {
                let eta: f64 = rng.sample(StandardNormal);
                let systematic: f64 = beta.iter().zip(x).map(|(b, f)| b * f).sum();
                size * (drift + systematic + sigma * eta).max(0.0)
            })
            .collect();
        let pd = (rng.random_range(0.001f64.ln()..0.05f64.ln())).exp();
        let rho = rng.random_range(0.05..0.35);
        let lgd = if rng.random_bool(0.5) { 0.6 } else { 1.0 };
        cps.push(Counterparty::new(id.clone(), pd, rho)?.with_lgd(lgd)?);
        ids.push(id);
        rows.push(row);
    }
    Ok(SyntheticPortfolio { exposures: ExposureMatrix::with_uniform_probs(ids, rows)?, counterparties: cps })
}
