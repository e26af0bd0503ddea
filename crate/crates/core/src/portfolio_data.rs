//! Counterparties, exposure scenarios and the concentration / exposure
//! reports built from them.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::numeric::{close_to_unit_sum, compensated_sum, uniform_probs};
use crate::risk_measures::lower_quantile;

/// Label of the optional explicit-probability row in an exposures file.
pub const PROBS_ROW: &str = "__probs__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterparty {
    pub id: String,
    pub pd: f64,
    /// Loading on the systematic factor.
    pub rho: f64,
    pub lgd: f64,
    pub ead_override: Option<f64>,
}

impl Counterparty {
    /// Counterparty with `lgd = 1` and no EAD override.
    pub fn new(id: impl Into<String>, pd: f64, rho: f64) -> Result<Self> {
        let cp = Counterparty { id: id.into(), pd, rho, lgd: 1.0, ead_override: None };
        cp.validate()?;
        Ok(cp)
    }

    pub fn with_lgd(mut self, lgd: f64) -> Result<Self> {
        self.lgd = lgd;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CoreError::Validation(format!("counterparty {}: {what}", self.id)));
        if !(self.pd > 0.0 && self.pd < 1.0) {
            return bad(&format!("pd must lie in (0, 1), got {}", self.pd));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return bad(&format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(0.0..=1.0).contains(&self.lgd) {
            return bad(&format!("lgd must lie in [0, 1], got {}", self.lgd));
        }
        if let Some(e) = self.ead_override {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(&format!("ead_override must be nonnegative, got {e}"));
            }
        }
        Ok(())
    }
}

/// Exposures `y[k][m]` of K counterparties across M market scenarios with
/// scenario probabilities `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposureMatrix {
    ids: Vec<String>,
    /// Row-major K x M.
    exposures: Vec<f64>,
    probs: Vec<f64>,
}

impl ExposureMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let k = ids.len();
        if k == 0 {
            return Err(CoreError::Validation("exposure matrix needs at least one counterparty".into()));
        }
        if rows.len() != k {
            return Err(CoreError::Validation(format!("{} ids but {} exposure rows", k, rows.len())));
        }
        let m = probs.len();
        if m == 0 {
            return Err(CoreError::Validation("exposure matrix needs at least one scenario".into()));
        }
        let mut exposures = Vec::with_capacity(k * m);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(CoreError::Validation(format!("row {r} ({}) has {} scenarios, expected {m}", ids[r], row.len())));
            }
            for (c, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CoreError::Validation(format!("exposure at (row {r}, col {c}) must be finite and nonnegative, got {v}")));
                }
            }
            exposures.extend_from_slice(row);
        }
        validate_probs(&probs, 1e-12)?;
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(CoreError::Validation(format!("duplicate counterparty id {id}")));
            }
        }
        Ok(Self { ids, exposures, probs })
    }

    pub fn with_uniform_probs(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        Self::new(ids, rows, uniform_probs(m))
    }

    pub fn num_counterparties(&self) -> usize {
        self.ids.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.probs.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Exposures of counterparty `k` across scenarios.
    pub fn row(&self, k: usize) -> &[f64] {
        let m = self.num_scenarios();
        &self.exposures[k * m..(k + 1) * m]
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.exposures[k * self.num_scenarios() + m]
    }

    /// Exposures of every counterparty under scenario `m`.
    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.num_counterparties()).map(|k| self.get(k, m)).collect()
    }

    /// Total portfolio exposure per scenario.
    pub fn scenario_totals(&self) -> Vec<f64> {
        let m = self.num_scenarios();
        let mut t = vec![0.0; m];
        for k in 0..self.num_counterparties() {
            for (tm, y) in t.iter_mut().zip(self.row(k)) {
                *tm += y;
            }
        }
        t
    }

    /// Probability-weighted mean exposure per counterparty.
    pub fn epe(&self) -> Vec<f64> {
        (0..self.num_counterparties()).map(|k| self.row(k).iter().zip(&self.probs).map(|(y, p)| y * p).sum()).collect()
    }
}

fn validate_probs(probs: &[f64], tol: f64) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            return Err(CoreError::Validation(format!("probability {i} must be finite and nonnegative, got {p}")));
        }
    }
    let s = compensated_sum(probs);
    if (s - 1.0).abs() > tol {
        return Err(CoreError::Validation(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProbsMode {
    #[default]
    Uniform,
    Explicit,
}

/// Read an exposures CSV (`counterparty_id,s1,...,sM`, optional trailing
/// `__probs__` row).
///
/// In uniform mode any `__probs__` row is ignored and `p_m = 1/M`. In
/// explicit mode the row is required, must sum to 1 within 1e-9, and is
/// rescaled so its sum is exactly 1.
pub fn read_exposures<R: Read>(reader: R, mode: ProbsMode) -> Result<ExposureMatrix> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| CoreError::Parse { line: 1, msg: e.to_string() })?.clone();
    if header.get(0) != Some("counterparty_id") {
        return Err(CoreError::Parse { line: 1, msg: "first column must be counterparty_id".into() });
    }
    let width = header.len();
    if width < 2 {
        return Err(CoreError::Parse { line: 1, msg: "no scenario columns".into() });
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut probs: Option<Vec<f64>> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CoreError::Parse { line: e.position().map_or(0, |p| p.line()), msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(CoreError::Parse { line, msg: format!("expected {width} fields, found {}", rec.len()) });
        }
        if probs.is_some() {
            return Err(CoreError::Parse { line, msg: format!("{PROBS_ROW} must be the final row") });
        }
        let id = rec[0].to_string();
        let mut values = Vec::with_capacity(width - 1);
        for (c, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field.parse().map_err(|_| CoreError::Parse { line, msg: format!("column {} is not a number: {field:?}", &header[c]) })?;
            values.push(v);
        }
        if id == PROBS_ROW {
            probs = Some(values);
            continue;
        }
        for (c, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CoreError::Validation(format!(
                    "exposure at (row {}, col {}) = {v} is negative or not finite (line {line}, counterparty {id})",
                    ids.len(),
                    &header[c + 1]
                )));
            }
        }
        ids.push(id);
        rows.push(values);
    }
    if ids.is_empty() {
        return Err(CoreError::Validation("exposures file has no counterparties".into()));
    }
    let probs = match mode {
        ProbsMode::Uniform => uniform_probs(width - 1),
        ProbsMode::Explicit => {
            let mut p = probs.ok_or_else(|| CoreError::Validation(format!("explicit mode needs a {PROBS_ROW} row")))?;
            validate_probs(&p, 1e-9)?;
            let s = compensated_sum(&p);
            p.iter_mut().for_each(|v| *v /= s);
            close_to_unit_sum(&mut p);
            if p.last().is_some_and(|&v| v < 0.0) {
                return Err(CoreError::Validation("probabilities cannot be normalized".into()));
            }
            p
        }
    };
    ExposureMatrix::new(ids, rows, probs)
}

pub fn load_exposures(path: &Path, mode: ProbsMode) -> Result<ExposureMatrix> {
    let f = std::fs::File::open(path).map_err(|e| CoreError::io(path, e))?;
    read_exposures(std::io::BufReader::new(f), mode)
}

/// Read a counterparties CSV (`counterparty_id,pd,rho,lgd,ead_override`).
/// Empty `lgd` means 1; empty `ead_override` means none.
pub fn read_counterparties<R: Read>(reader: R) -> Result<Vec<Counterparty>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| CoreError::Parse { line: 1, msg: e.to_string() })?.clone();
    let expected = ["counterparty_id", "pd", "rho", "lgd", "ead_override"];
    if header.len() < 3 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(CoreError::Parse { line: 1, msg: format!("header must be {}", expected.join(",")) });
    }
    let mut out: Vec<Counterparty> = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CoreError::Parse { line: e.position().map_or(0, |p| p.line()), msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 3 || rec.len() > 5 {
            return Err(CoreError::Parse { line, msg: format!("expected 3 to 5 fields, found {}", rec.len()) });
        }
        let num = |i: usize| -> Result<Option<f64>> {
            match rec.get(i).unwrap_or("") {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| CoreError::Parse { line, msg: format!("{} is not a number: {s:?}", expected[i]) }),
            }
        };
        let need = |i: usize| num(i)?.ok_or_else(|| CoreError::Parse { line, msg: format!("missing {}", expected[i]) });
        let cp = Counterparty {
            id: rec[0].to_string(),
            pd: need(1)?,
            rho: need(2)?,
            lgd: num(3)?.unwrap_or(1.0),
            ead_override: num(4)?,
        };
        cp.validate()?;
        if !seen.insert(cp.id.clone()) {
            return Err(CoreError::Validation(format!("duplicate counterparty id {} (line {line})", cp.id)));
        }
        out.push(cp);
    }
    Ok(out)
}

pub fn load_counterparties(path: &Path) -> Result<Vec<Counterparty>> {
    let f = std::fs::File::open(path).map_err(|e| CoreError::io(path, e))?;
    read_counterparties(std::io::BufReader::new(f))
}

fn csv_err(e: impl std::fmt::Display) -> CoreError {
    CoreError::Validation(format!("csv encoding: {e}"))
}

/// Write `x` in the exposures CSV format; `with_probs` appends the
/// `__probs__` row.
pub fn write_exposures<W: Write>(x: &ExposureMatrix, writer: W, with_probs: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["counterparty_id".to_string()];
    header.extend((1..=x.num_scenarios()).map(|m| format!("s{m}")));
    w.write_record(&header).map_err(csv_err)?;
    for (k, id) in x.ids().iter().enumerate() {
        w.write_record(std::iter::once(id.clone()).chain(x.row(k).iter().map(f64::to_string))).map_err(csv_err)?;
    }
    if with_probs {
        w.write_record(std::iter::once(PROBS_ROW.to_string()).chain(x.probs().iter().map(f64::to_string))).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_counterparties<W: Write>(cps: &[Counterparty], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["counterparty_id", "pd", "rho", "lgd", "ead_override"]).map_err(csv_err)?;
    for c in cps {
        let ead = c.ead_override.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([c.id.clone(), c.pd.to_string(), c.rho.to_string(), c.lgd.to_string(), ead]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Reorder `cps` to follow `x`'s counterparty ids. Every exposure row must
/// have exactly one counterparty and vice versa.
pub fn align_counterparties(x: &ExposureMatrix, cps: &[Counterparty]) -> Result<Vec<Counterparty>> {
    if cps.len() != x.num_counterparties() {
        return Err(CoreError::Validation(format!(
            "{} counterparties but {} exposure rows",
            cps.len(),
            x.num_counterparties()
        )));
    }
    x.ids()
        .iter()
        .map(|id| {
            cps.iter().find(|c| &c.id == id).cloned().ok_or_else(|| CoreError::Validation(format!("no counterparty record for exposure id {id}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub herfindahl: f64,
    pub effective_counterparties: f64,
    /// Cumulative share of total exposure, names sorted by decreasing size.
    pub cumulative_exposure_share: Vec<f64>,
    /// Number of names the index was computed over (after clamping to K).
    pub top_n: usize,
}

/// Herfindahl index of the `top_n` largest exposures and its reciprocal.
/// `top_n` larger than the number of names is clamped.
pub fn concentration(epe: &[f64], top_n: usize) -> Result<ConcentrationReport> {
    if top_n == 0 {
        return Err(CoreError::Validation("top_n must be at least 1".into()));
    }
    if epe.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(CoreError::Validation("exposures must be finite and nonnegative".into()));
    }
    let mut w = epe.to_vec();
    w.sort_by(|a, b| b.total_cmp(a));
    let n = top_n.min(w.len());
    let top = &w[..n];
    let sum: f64 = top.iter().sum();
    if !(sum > 0.0) {
        return Err(CoreError::Validation("concentration is undefined for all-zero exposures".into()));
    }
    let sum_sq: f64 = top.iter().map(|v| v * v).sum();
    let herfindahl = sum_sq / (sum * sum);
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let cumulative_exposure_share = w
        .iter()
        .map(|v| {
            acc += v;
            acc / total
        })
        .collect();
    Ok(ConcentrationReport { herfindahl, effective_counterparties: 1.0 / herfindahl, cumulative_exposure_share, top_n: n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub counterparty_id: String,
    pub mean: f64,
    /// 5% exposure quantile as a percentage of the mean.
    pub p5_pct: f64,
    pub p95_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    /// Sorted by decreasing mean exposure.
    pub rows: Vec<BandRow>,
    /// Counterparties with zero mean exposure, left out of `rows`.
    pub excluded: Vec<String>,
}

/// Per-counterparty 5% / 95% exposure quantiles under the scenario
/// probabilities, as percentages of the mean.
pub fn exposure_band_report(x: &ExposureMatrix) -> BandReport {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (k, id) in x.ids().iter().enumerate() {
        let values = x.row(k);
        let mean: f64 = values.iter().zip(x.probs()).map(|(y, p)| y * p).sum();
        if !(mean > 0.0) {
            excluded.push(id.clone());
            continue;
        }
        let p5 = lower_quantile(values, x.probs(), 0.05);
        let p95 = lower_quantile(values, x.probs(), 0.95);
        rows.push((k, BandRow { counterparty_id: id.clone(), mean, p5_pct: 100.0 * p5 / mean, p95_pct: 100.0 * p95 / mean }));
    }
    rows.sort_by(|(ka, a), (kb, b)| b.mean.total_cmp(&a.mean).then(ka.cmp(kb)));
    BandReport { rows: rows.into_iter().map(|(_, r)| r).collect(), excluded }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    /// Probability mass per bin.
    pub mass: Vec<f64>,
}

/// Equal-width histogram of total portfolio exposure per scenario, weighted
/// by the scenario probabilities. The last bin is closed on the right. When
/// every total is equal all mass falls in the first bin.
pub fn total_exposure_histogram(x: &ExposureMatrix, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(CoreError::Validation("histogram needs at least one bin".into()));
    }
    let totals = x.scenario_totals();
    let lo = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + i as f64 * width }).collect();
    let mut mass = vec![0.0; bins];
    for (t, p) in totals.iter().zip(x.probs()) {
        let b = if width > 0.0 { (((t - lo) / width) as usize).min(bins - 1) } else { 0 };
        mass[b] += p;
    }
    Ok(Histogram { edges, mass })
}
