//! VaR, CVaR and economic capital for discrete loss distributions.
//!
//! CVaR is the average of the quantile function over `(alpha, 1)`. On a
//! discrete law this splits the atom at VaR fractionally, which makes it
//! coincide with the supremum over tilted measures with density at most
//! `1/(1 - alpha)` ([`cvar_by_tilting`]).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::numeric::{compensated_sum, uniform_probs};

/// Slack on cumulative probabilities when locating a quantile, so that
/// `1/3 + 1/3 + 1/3` counts as reaching 1.
const CUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    outcomes: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Probabilities must be nonnegative and sum to 1 within 1e-12.
    pub fn new(outcomes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != probs.len() {
            return Err(CoreError::Validation(format!(
                "need matching nonempty outcomes and probabilities, got {} and {}",
                outcomes.len(),
                probs.len()
            )));
        }
        if let Some(x) = outcomes.iter().find(|x| !x.is_finite()) {
            return Err(CoreError::Validation(format!("outcome {x} is not finite")));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(CoreError::Validation(format!("probability {p} is negative or not finite")));
        }
        let s = compensated_sum(&probs);
        if (s - 1.0).abs() > 1e-12 {
            return Err(CoreError::Validation(format!("probabilities sum to {s}, not 1")));
        }
        Ok(Self { outcomes, probs })
    }

    /// Equally likely outcomes.
    pub fn uniform(outcomes: Vec<f64>) -> Result<Self> {
        let p = uniform_probs(outcomes.len());
        Self::new(outcomes, p)
    }

    pub fn point_mass(x: f64) -> Self {
        Self { outcomes: vec![x], probs: vec![1.0] }
    }

    /// Normalize nonnegative `weights` to probabilities. Negative weights
    /// down to `-1e-9` (solver noise) are treated as zero.
    pub fn from_weights(outcomes: Vec<f64>, weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= -1e-9)) {
            return Err(CoreError::Validation(format!("weight {w} is negative or not finite")));
        }
        let clean: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let s = compensated_sum(&clean);
        if !(s > 0.0) {
            return Err(CoreError::Validation("weights have no mass".into()));
        }
        Self::new(outcomes, clean.iter().map(|w| w / s).collect())
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().zip(&self.probs).map(|(x, p)| x * p).sum()
    }

    /// Apply `x -> scale * x + shift` to every outcome.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        Self { outcomes: self.outcomes.iter().map(|x| scale * x + shift).collect(), probs: self.probs.clone() }
    }

    fn ascending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.outcomes[a].total_cmp(&self.outcomes[b]).then(a.cmp(&b)));
        idx
    }
}

fn check_alpha(alpha: f64) {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
}

/// Smallest value whose cumulative weight reaches `level` (weights need not
/// be sorted by value).
pub fn lower_quantile(values: &[f64], weights: &[f64], level: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    for &i in &idx {
        cum += weights[i];
        if cum >= level - CUM_TOL {
            return values[i];
        }
    }
    values[*idx.last().expect("nonempty values")]
}

/// Lower alpha-quantile of the loss: smallest `x` with `P(L <= x) >= alpha`.
pub fn var(d: &DiscreteDistribution, alpha: f64) -> f64 {
    check_alpha(alpha);
    lower_quantile(&d.outcomes, &d.probs, alpha)
}

/// Average of the quantile function over `(alpha, 1)`.
///
/// With `v = VaR_alpha` this is
/// `(E[L; L > v] + (P(L <= v) - alpha) v) / (1 - alpha)`.
pub fn cvar(d: &DiscreteDistribution, alpha: f64) -> f64 {
    check_alpha(alpha);
    let idx = d.ascending();
    let mut cum = 0.0;
    let mut cut = idx.len() - 1;
    for (pos, &i) in idx.iter().enumerate() {
        cum += d.probs[i];
        if cum >= alpha - CUM_TOL {
            cut = pos;
            break;
        }
    }
    let v = d.outcomes[idx[cut]];
    // Strictly-above-VaR tail, plus the ties with VaR that sort later.
    let mut above = 0.0;
    let mut above_mass = 0.0;
    for &i in &idx[cut + 1..] {
        let x = d.outcomes[i];
        if x > v {
            above += d.probs[i] * x;
            above_mass += d.probs[i];
        }
    }
    let at_v = (1.0 - above_mass) - alpha;
    (above + at_v.max(0.0) * v) / (1.0 - alpha)
}

/// CVaR as the supremum of `E_G[L]` over tilted measures with
/// `dG/dF <= 1/(1 - alpha)`: fill the largest outcomes first at the maximal
/// density. Returns the value and the tilted probabilities `G`.
pub fn cvar_by_tilting(d: &DiscreteDistribution, alpha: f64) -> (f64, Vec<f64>) {
    check_alpha(alpha);
    let cap = 1.0 / (1.0 - alpha);
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d.outcomes[b].total_cmp(&d.outcomes[a]).then(a.cmp(&b)));
    let mut g = vec![0.0; d.len()];
    let mut remaining = 1.0;
    let mut value = 0.0;
    for &i in &idx {
        if remaining <= 0.0 {
            break;
        }
        let take = (d.probs[i] * cap).min(remaining);
        g[i] = take;
        remaining -= take;
        value += take * d.outcomes[i];
    }
    (value, g)
}

/// VaR of equally weighted samples, reordering `samples` in place.
pub fn empirical_var(samples: &mut [f64], alpha: f64) -> f64 {
    check_alpha(alpha);
    let n = samples.len();
    assert!(n > 0, "empirical_var needs samples");
    // Smallest k with k/n >= alpha.
    let k = ((alpha * n as f64 - CUM_TOL * n as f64).ceil() as usize).clamp(1, n);
    *samples.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

/// CVaR of equally weighted samples in linear time, reordering `samples`.
/// Agrees with [`cvar`] on the uniform law over the samples.
pub fn empirical_cvar(samples: &mut [f64], alpha: f64) -> f64 {
    check_alpha(alpha);
    let n = samples.len();
    assert!(n > 0, "empirical_cvar needs samples");
    let tail = (1.0 - alpha) * n as f64;
    let whole = (tail.floor() as usize).min(n);
    let frac = tail - whole as f64;
    if whole == n {
        return samples.iter().sum::<f64>() / n as f64;
    }
    // After partitioning, positions > n - whole - 1 hold the `whole` largest.
    let split = n - whole - 1;
    let (_, pivot, top) = samples.select_nth_unstable_by(split, f64::total_cmp);
    let pivot = *pivot;
    let top_sum: f64 = top.iter().sum();
    (top_sum + frac * pivot) / tail
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcMode {
    #[default]
    CvarMinusEl,
    VarMinusEl,
    Cvar,
    Var,
}

/// Economic capital under `mode`; EL is the mean loss.
pub fn economic_capital(d: &DiscreteDistribution, alpha: f64, mode: EcMode) -> f64 {
    match mode {
        EcMode::CvarMinusEl => cvar(d, alpha) - d.mean(),
        EcMode::VarMinusEl => var(d, alpha) - d.mean(),
        EcMode::Cvar => cvar(d, alpha),
        EcMode::Var => var(d, alpha),
    }
}

/// Regulatory alpha floors, reported next to computed multipliers.
pub const ALPHA_FLOORS: [f64; 2] = [1.2, 1.4];

/// `EC_total / EC_epe`, no floor applied.
pub fn alpha_multiplier(ec_total: f64, ec_epe: f64) -> Result<f64> {
    if !(ec_epe > 0.0) {
        return Err(CoreError::Domain(format!("alpha multiplier needs positive EPE capital, got {ec_epe}")));
    }
    Ok(ec_total / ec_epe)
}
