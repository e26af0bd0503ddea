//! Run configuration: one JSON document, optionally overridden by flags.
//!
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults. Relative paths are taken relative to the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wrongway_core::copula_stress::LossKind;
use wrongway_core::portfolio_data::ProbsMode;
use wrongway_core::wcc::Formulation;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub out_dir: PathBuf,
    pub alphas: Vec<f64>,
    pub grid: GridConfig,
    pub formulation: Formulation,
    pub r_grid: CorrelationGrid,
    pub loss_kinds: Vec<LossKind>,
    /// Master seed for every random draw (simulation, bootstrap).
    pub seed: u64,
    pub sim: SimSettings,
    pub compare: CompareSettings,
    pub report: ReportSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub exposures: Option<PathBuf>,
    pub counterparties: Option<PathBuf>,
    pub probs_mode: ProbsMode,
    /// Generate a portfolio instead of reading files.
    pub synthetic: Option<SyntheticSpec>,
    /// Keep only the largest counterparties by expected exposure.
    pub largest: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub counterparties: usize,
    pub scenarios: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub z_lo: f64,
    pub z_hi: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 100, z_lo: -5.0, z_hi: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for CorrelationGrid {
    fn default() -> Self {
        Self { lo: -1.0, hi: 1.0, points: 21 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub n_draws: usize,
    pub stream_id: u64,
    pub bootstrap_resamples: usize,
    pub write_losses: bool,
    /// Coupling CSV written by `wcc`, required by `simulate`.
    pub coupling: Option<PathBuf>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { n_draws: 100_000, stream_id: 0, bootstrap_resamples: 200, write_losses: false, coupling: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSettings {
    /// Credit grid sizes, one table block ("case") each. Empty means `grid.n`.
    pub grid_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSettings {
    pub top_n: usize,
    pub histogram_bins: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self { top_n: 20, histogram_bins: 50 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            out_dir: PathBuf::from("out"),
            alphas: vec![0.95, 0.99],
            grid: GridConfig::default(),
            formulation: Formulation::Reduced,
            r_grid: CorrelationGrid::default(),
            loss_kinds: vec![LossKind::Systematic],
            seed: 0,
            sim: SimSettings::default(),
            compare: CompareSettings::default(),
            report: ReportSettings::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alphas: Vec<f64>,
    pub grid_n: Option<usize>,
    pub z_lo: Option<f64>,
    pub z_hi: Option<f64>,
    pub formulation: Option<Formulation>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub loss_kinds: Vec<LossKind>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if !o.alphas.is_empty() {
            self.alphas = o.alphas.clone();
        }
        if let Some(n) = o.grid_n {
            self.grid.n = n;
        }
        if let Some(z) = o.z_lo {
            self.grid.z_lo = z;
        }
        if let Some(z) = o.z_hi {
            self.grid.z_hi = z;
        }
        if let Some(f) = o.formulation {
            self.formulation = f;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if !o.loss_kinds.is_empty() {
            self.loss_kinds = o.loss_kinds.clone();
        }
    }

    /// Checks that do not need the data; run before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.alphas.is_empty() {
            return bad("alphas must not be empty".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("alpha {a} is outside (0, 1)"));
        }
        if self.grid.n == 0 {
            return bad("grid.n must be at least 1".into());
        }
        if !(self.grid.z_lo.is_finite() && self.grid.z_hi.is_finite() && self.grid.z_lo < self.grid.z_hi) {
            return bad(format!("grid bounds [{}, {}] are not an increasing finite pair", self.grid.z_lo, self.grid.z_hi));
        }
        let r = &self.r_grid;
        if r.points == 0 || !(r.lo <= r.hi) || r.lo < -1.0 || r.hi > 1.0 {
            return bad(format!("r_grid [{}, {}] with {} points is not a correlation range", r.lo, r.hi, r.points));
        }
        if self.loss_kinds.is_empty() {
            return bad("loss_kinds must not be empty".into());
        }
        if self.sim.n_draws == 0 {
            return bad("sim.n_draws must be at least 1".into());
        }
        if self.compare.grid_sizes.contains(&0) {
            return bad("compare.grid_sizes entries must be at least 1".into());
        }
        if self.report.top_n == 0 || self.report.histogram_bins == 0 {
            return bad("report.top_n and report.histogram_bins must be at least 1".into());
        }
        if self.data.largest == Some(0) {
            return bad("data.largest must be at least 1".into());
        }
        match (&self.data.synthetic, &self.data.exposures, &self.data.counterparties) {
            (Some(s), None, None) => {
                if s.counterparties == 0 || s.scenarios == 0 {
                    return bad("synthetic portfolio needs counterparties and scenarios".into());
                }
            }
            (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return bad("give either data.synthetic or data files, not both".into()),
            _ => return bad("data.exposures and data.counterparties are both required".into()),
        }
        Ok(())
    }

    /// Canonical JSON (fields in declaration order, no whitespace).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
