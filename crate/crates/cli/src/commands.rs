//! The subcommands. Each reads the data named by the config, computes, and
//! writes its files through a [`Sink`], returning the paths written.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};
use wrongway_core::copula_stress::{correlation_grid, ratio_curve, sort_scenarios, LossKind, RatioCurve, SortKey};
use wrongway_core::credit_model::{build_credit_grid, systematic_loss_surface, CreditGrid, LossSurface};
use wrongway_core::portfolio_data::{
    align_counterparties, concentration, exposure_band_report, load_counterparties, load_exposures, total_exposure_histogram, Counterparty,
    ExposureMatrix,
};
use wrongway_core::report::Table;
use wrongway_core::risk_measures::cvar;
use wrongway_core::sim_engine::{discretization_diagnostic, simulate_loss_samples, summarize, total_ratio_curve, SimConfig};
use wrongway_core::synthetic::synthetic_portfolio;
use wrongway_core::wcc::{build_full_lp, build_reduced_lp, solve_wcc, Formulation, WorstCaseCoupling};
use wrongway_core::CoreError;
use wrongway_lp::mps::to_mps_string;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{read_csv_meta, Sink};

/// Added to the master seed for bootstrap resampling so it never shares a
/// stream with the simulation itself.
const BOOTSTRAP_SEED_OFFSET: u64 = 0x5EED_B007;

pub struct Portfolio {
    pub exposures: ExposureMatrix,
    /// Aligned with the exposure rows.
    pub counterparties: Vec<Counterparty>,
}

pub fn load_portfolio(cfg: &RunConfig) -> Result<Portfolio> {
    let d = &cfg.data;
    let (x, cps) = match (&d.synthetic, &d.exposures, &d.counterparties) {
        (Some(s), _, _) => {
            let p = synthetic_portfolio(s.counterparties, s.scenarios, s.seed)?;
            (p.exposures, p.counterparties)
        }
        (None, Some(xp), Some(cp)) => {
            let x = load_exposures(xp, d.probs_mode)?;
            let cps = load_counterparties(cp)?;
            let cps = align_counterparties(&x, &cps)?;
            (x, cps)
        }
        _ => return Err(CliError::Config("no portfolio configured".into())),
    };
    match d.largest {
        Some(n) if n < x.num_counterparties() => {
            let epe = x.epe();
            let mut idx: Vec<usize> = (0..epe.len()).collect();
            idx.sort_by(|&a, &b| epe[b].total_cmp(&epe[a]).then(a.cmp(&b)));
            idx.truncate(n);
            idx.sort_unstable();
            let ids = idx.iter().map(|&k| x.ids()[k].clone()).collect();
            let rows = idx.iter().map(|&k| x.row(k).to_vec()).collect();
            let exposures = ExposureMatrix::new(ids, rows, x.probs().to_vec())?;
            let counterparties = idx.iter().map(|&k| cps[k].clone()).collect();
            Ok(Portfolio { exposures, counterparties })
        }
        _ => Ok(Portfolio { exposures: x, counterparties: cps }),
    }
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    eprintln!("warning: {msg}");
    warnings.push(msg);
}

pub fn cmd_report(cfg: &RunConfig, generated_at: &str) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let p = load_portfolio(cfg)?;
    let x = &p.exposures;
    let mut sink = Sink::new(cfg.clone(), "report", generated_at)?;
    let mut warnings = Vec::new();
    let k = x.num_counterparties();
    if cfg.report.top_n > k {
        warn(&mut warnings, format!("top_n {} exceeds the {k} counterparties; using {k}", cfg.report.top_n));
    }
    let epe = x.epe();
    let conc = concentration(&epe, cfg.report.top_n)?;
    let total: f64 = epe.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| epe[b].total_cmp(&epe[a]).then(a.cmp(&b)));
    let mut t = Table::new(["rank", "counterparty_id", "epe", "share", "cumulative_share", "in_top_n"]);
    for (rank, &i) in order.iter().enumerate() {
        t.push(vec![
            json!(rank + 1),
            json!(x.ids()[i]),
            json!(epe[i]),
            json!(epe[i] / total),
            json!(conc.cumulative_exposure_share[rank]),
            json!(rank < conc.top_n),
        ]);
    }
    sink.csv("concentration.csv", &[("top_n", json!(conc.top_n)), ("herfindahl", json!(conc.herfindahl))], &t)?;

    let bands = exposure_band_report(x);
    let mut t = Table::new(["counterparty_id", "mean", "p5_pct", "p95_pct"]);
    for r in &bands.rows {
        t.push(vec![json!(r.counterparty_id), json!(r.mean), json!(r.p5_pct), json!(r.p95_pct)]);
    }
    sink.csv("exposure_bands.csv", &[], &t)?;

    let h = total_exposure_histogram(x, cfg.report.histogram_bins)?;
    let mut t = Table::new(["bin", "lower", "upper", "mass"]);
    for (i, m) in h.mass.iter().enumerate() {
        t.push(vec![json!(i), json!(h.edges[i]), json!(h.edges[i + 1]), json!(m)]);
    }
    sink.csv("exposure_histogram.csv", &[], &t)?;

    sink.json(
        "report.json",
        &[],
        json!({
            "counterparties": k,
            "scenarios": x.num_scenarios(),
            "top_n": conc.top_n,
            "herfindahl": conc.herfindahl,
            "effective_counterparties": conc.effective_counterparties,
            "excluded_from_bands": bands.excluded,
            "warnings": warnings,
        }),
    )?;
    Ok(sink.into_written())
}

struct Setup {
    portfolio: Portfolio,
    grid: CreditGrid,
    surface: LossSurface,
}

fn setup(cfg: &RunConfig, n_cells: usize) -> Result<Setup> {
    let portfolio = load_portfolio(cfg)?;
    let grid = build_credit_grid(n_cells, cfg.grid.z_lo, cfg.grid.z_hi)?;
    let surface = systematic_loss_surface(&portfolio.exposures, &portfolio.counterparties, &grid)?;
    Ok(Setup { portfolio, grid, surface })
}

fn solve_all(l: &LossSurface, alphas: &[f64], f: Formulation) -> Result<Vec<WorstCaseCoupling>> {
    Ok(alphas.par_iter().map(|&a| solve_wcc(l, a, f)).collect::<Result<Vec<_>, CoreError>>()?)
}

fn independent_cvar(l: &LossSurface, alpha: f64) -> Result<f64> {
    let psi: Vec<f64> = l.market_probs().iter().flat_map(|p| l.credit_probs().iter().map(move |q| p * q)).collect();
    Ok(cvar(&l.law_under(&psi)?, alpha))
}

pub fn coupling_file_name(alpha: f64) -> String {
    format!("coupling_alpha{alpha}.csv")
}

pub fn cmd_wcc(cfg: &RunConfig, generated_at: &str) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let s = setup(cfg, cfg.grid.n)?;
    let l = &s.surface;
    let solved = solve_all(l, &cfg.alphas, cfg.formulation)?;
    let mut sink = Sink::new(cfg.clone(), "wcc", generated_at)?;
    let mut rows = Vec::new();
    for w in &solved {
        let mut t = Table::new(["market_scenario", "credit_cell", "z", "psi", "mu"]);
        for (m, n) in w.support() {
            let c = m * w.cols + n;
            t.push(vec![json!(m), json!(n), json!(s.grid.cell_reps()[n]), json!(w.psi[c]), json!(w.mu[c])]);
        }
        let name = coupling_file_name(w.alpha);
        let extra = [
            ("alpha", json!(w.alpha)),
            ("rows", json!(w.rows)),
            ("cols", json!(w.cols)),
            ("formulation", json!(w.formulation)),
            ("wcc_cvar", json!(w.wcc_cvar)),
        ];
        sink.csv(&name, &extra, &t)?;
        let el: f64 = l.values().iter().zip(&w.psi).map(|(a, b)| a * b).sum();
        rows.push(json!({
            "alpha": w.alpha,
            "formulation": w.formulation,
            "market_scenarios": w.rows,
            "credit_cells": w.cols,
            "wcc_cvar": w.wcc_cvar,
            "independent_cvar": independent_cvar(l, w.alpha)?,
            "expected_loss": el,
            "scale": l.scale(),
            "support_size": t.rows.len(),
            "certificate": w.certificate,
            "coupling_file": name,
        }));
    }
    sink.json("wcc_summary.json", &[], Value::Array(rows))?;
    Ok(sink.into_written())
}

fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 13] =
        [(1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"), (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")];
    let mut s = String::new();
    for (v, r) in TABLE {
        while n >= v {
            s.push_str(r);
            n -= v;
        }
    }
    s
}

/// One block of the min/max table.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub label: String,
    pub market_scenarios: usize,
    pub credit_scenarios: usize,
    pub curves: Vec<RatioCurve>,
}

/// Plain-text min/max ratio table: per case a heading, the scenario
/// counts, a header row, then one `alpha min max` row per confidence level.
pub fn render_ratio_table(cases: &[CaseResult], kind: LossKind) -> String {
    let tag = match kind {
        LossKind::Systematic => "sys",
        LossKind::Total => "tot",
    };
    let min_h = format!("min (CVaR_{tag} / CVaR_wcc)");
    let max_h = format!("max (CVaR_{tag} / CVaR_wcc)");
    let mut out = String::new();
    for c in cases {
        let mn = (c.market_scenarios * c.credit_scenarios) as f64;
        out.push_str(&format!("{}\n", c.label));
        out.push_str(&format!(
            "{:<16}{:<32}{}\n",
            format!("MN = O(10^{})", mn.log10().floor() as i32),
            format!("M = {} market scenarios", c.market_scenarios),
            format!("N = {} credit scenarios", c.credit_scenarios)
        ));
        out.push_str(&format!("{:<16}{:<32}{}\n", "alpha", min_h, max_h));
        for r in c.curves.iter().filter(|r| r.loss_kind == kind) {
            out.push_str(&format!(
                "{:<16}{:<32}{}\n",
                r.alpha,
                format!("{:.1}%", 100.0 * r.min_ratio),
                format!("{:.1}%", 100.0 * r.max_ratio)
            ));
        }
    }
    out
}

fn argext(curve: &RatioCurve, better: impl Fn(f64, f64) -> bool) -> f64 {
    let mut best = 0;
    for i in 1..curve.ratio.len() {
        if better(curve.ratio[i], curve.ratio[best]) {
            best = i;
        }
    }
    curve.correlations[best]
}

pub fn cmd_compare(cfg: &RunConfig, generated_at: &str) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let sizes = if cfg.compare.grid_sizes.is_empty() { vec![cfg.grid.n] } else { cfg.compare.grid_sizes.clone() };
    let r_grid = correlation_grid(cfg.r_grid.lo, cfg.r_grid.hi, cfg.r_grid.points)?;
    let portfolio = load_portfolio(cfg)?;
    let x = &portfolio.exposures;
    let cps = &portfolio.counterparties;
    let order = sort_scenarios(x, SortKey::TotalExposure);
    let mut cases = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let grid = build_credit_grid(n, cfg.grid.z_lo, cfg.grid.z_hi)?;
        let l = systematic_loss_surface(x, cps, &grid)?;
        let solved = solve_all(&l, &cfg.alphas, cfg.formulation)?;
        let mut curves = Vec::new();
        for kind in &cfg.loss_kinds {
            for w in &solved {
                let curve = match kind {
                    LossKind::Systematic => ratio_curve(&l, &grid, w.wcc_cvar, w.alpha, &r_grid, &order)?,
                    LossKind::Total => {
                        let sim = SimConfig { n_draws: cfg.sim.n_draws, seed: cfg.seed, loss_kind: LossKind::Total, stream_id: cfg.sim.stream_id };
                        total_ratio_curve(&w.psi, &l, x, cps, &grid, w.alpha, &r_grid, &order, &sim)?
                    }
                };
                curves.push(curve);
            }
        }
        cases.push(CaseResult { label: format!("Case {}", roman(i + 1)), market_scenarios: x.num_scenarios(), credit_scenarios: n, curves });
    }

    let mut sink = Sink::new(cfg.clone(), "compare", generated_at)?;
    let mut curve_table = Table::new(["case", "credit_scenarios", "loss_kind", "alpha", "r", "comparator_cvar", "wcc_cvar", "ratio"]);
    let mut summary = Vec::new();
    for c in &cases {
        for r in &c.curves {
            for i in 0..r.ratio.len() {
                curve_table.push(vec![
                    json!(c.label),
                    json!(c.credit_scenarios),
                    json!(r.loss_kind),
                    json!(r.alpha),
                    json!(r.correlations[i]),
                    json!(r.comparator_cvar[i]),
                    json!(r.wcc_cvar),
                    json!(r.ratio[i]),
                ]);
            }
            summary.push(json!({
                "case": c.label,
                "market_scenarios": c.market_scenarios,
                "credit_scenarios": c.credit_scenarios,
                "loss_kind": r.loss_kind,
                "alpha": r.alpha,
                "wcc_cvar": r.wcc_cvar,
                "min_ratio": r.min_ratio,
                "max_ratio": r.max_ratio,
                "argmin_r": argext(r, |a, b| a < b),
                "argmax_r": argext(r, |a, b| a > b),
            }));
        }
    }
    sink.csv("ratio_curves.csv", &[], &curve_table)?;
    for kind in &cfg.loss_kinds {
        let mut t = Table::new(["case", "market_scenarios", "credit_scenarios", "alpha", "min_ratio", "max_ratio"]);
        for c in &cases {
            for r in c.curves.iter().filter(|r| r.loss_kind == *kind) {
                t.push(vec![json!(c.label), json!(c.market_scenarios), json!(c.credit_scenarios), json!(r.alpha), json!(r.min_ratio), json!(r.max_ratio)]);
            }
        }
        let extra = [("loss_kind", json!(kind))];
        sink.csv(&format!("ratio_table_{}.csv", kind.as_str()), &extra, &t)?;
        sink.text(&format!("ratio_table_{}.txt", kind.as_str()), "#", &extra, &render_ratio_table(&cases, *kind))?;
    }
    sink.json("compare_summary.json", &[], Value::Array(summary))?;
    Ok(sink.into_written())
}

/// A coupling written by `wcc`: dense row-major `psi` plus its alpha.
pub struct StoredCoupling {
    pub alpha: f64,
    pub rows: usize,
    pub cols: usize,
    pub psi: Vec<f64>,
}

pub fn read_coupling(path: &std::path::Path) -> Result<StoredCoupling> {
    let (meta, body) = read_csv_meta(path)?;
    let field = |k: &str| meta.get(k).ok_or_else(|| CliError::Config(format!("{}: coupling file lacks `{k}`", path.display())));
    let dim = |k: &str| -> Result<usize> {
        field(k)?.as_u64().map(|v| v as usize).ok_or_else(|| CliError::Config(format!("{}: `{k}` is not a count", path.display())))
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    let alpha = field("alpha")?.as_f64().ok_or_else(|| CliError::Config(format!("{}: `alpha` is not a number", path.display())))?;
    let mut psi = vec![0.0; rows * cols];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    for (i, rec) in rdr.records().enumerate() {
        let bad = |msg: String| CliError::Core(CoreError::Parse { line: i as u64 + 2, msg });
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let get = |j: usize| rec.get(j).ok_or_else(|| bad(format!("missing column {j}")));
        let m: usize = get(0)?.parse().map_err(|e| bad(format!("market index: {e}")))?;
        let n: usize = get(1)?.parse().map_err(|e| bad(format!("credit index: {e}")))?;
        let v: f64 = get(3)?.parse().map_err(|e| bad(format!("psi: {e}")))?;
        if m >= rows || n >= cols {
            return Err(bad(format!("cell ({m}, {n}) outside {rows} x {cols}")));
        }
        psi[m * cols + n] = v;
    }
    Ok(StoredCoupling { alpha, rows, cols, psi })
}

pub fn cmd_simulate(cfg: &RunConfig, generated_at: &str) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let path = cfg.sim.coupling.as_ref().ok_or_else(|| CliError::Config("simulate needs sim.coupling, a coupling file written by `wcc`".into()))?;
    let stored = read_coupling(path)?;
    let s = setup(cfg, cfg.grid.n)?;
    if stored.rows != s.surface.num_market() || stored.cols != s.surface.num_credit() {
        return Err(CliError::Config(format!(
            "coupling is {} x {} but the configured portfolio and grid give {} x {}",
            stored.rows,
            stored.cols,
            s.surface.num_market(),
            s.surface.num_credit()
        )));
    }
    let x = &s.portfolio.exposures;
    let cps = &s.portfolio.counterparties;
    let mut sink = Sink::new(cfg.clone(), "simulate", generated_at)?;
    let coupling_extra = [("coupling_alpha", json!(stored.alpha))];
    let mut rows = Vec::new();
    for kind in &cfg.loss_kinds {
        let sim = SimConfig { n_draws: cfg.sim.n_draws, seed: cfg.seed, loss_kind: *kind, stream_id: cfg.sim.stream_id };
        let samples = simulate_loss_samples(&stored.psi, x, cps, &s.grid, &sim)?;
        let summary = summarize(&samples, &cfg.alphas, cfg.sim.bootstrap_resamples, cfg.seed.wrapping_add(BOOTSTRAP_SEED_OFFSET))?;
        let mut row = serde_json::to_value(&summary).expect("summary serializes");
        row["loss_kind"] = json!(kind);
        if *kind == LossKind::Systematic {
            let law = s.surface.law_under(&stored.psi)?;
            row["flattened_cvar"] = cfg.alphas.iter().map(|&a| json!({"alpha": a, "cvar": cvar(&law, a)})).collect();
            row["discretization"] = serde_json::to_value(discretization_diagnostic(&stored.psi, &s.surface, x, cps, &s.grid)?).expect("serializes");
        }
        rows.push(row);
        if cfg.sim.write_losses {
            let mut t = Table::new(["draw", "loss"]);
            for (j, v) in samples.iter().enumerate() {
                t.push(vec![json!(j), json!(v)]);
            }
            let mut extra = coupling_extra.to_vec();
            extra.push(("loss_kind", json!(kind)));
            sink.csv(&format!("losses_{}.csv", kind.as_str()), &extra, &t)?;
        }
    }
    sink.json("sim_summary.json", &coupling_extra, Value::Array(rows))?;
    Ok(sink.into_written())
}

pub fn mps_file_name(f: Formulation, alpha: f64) -> String {
    format!("wcc_{}_alpha{alpha}.mps", f.as_str())
}

pub fn cmd_mps_export(cfg: &RunConfig, generated_at: &str) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let s = setup(cfg, cfg.grid.n)?;
    let forms: &[Formulation] = match cfg.formulation {
        Formulation::Both => &[Formulation::Full, Formulation::Reduced],
        Formulation::Full => &[Formulation::Full],
        Formulation::Reduced => &[Formulation::Reduced],
    };
    let mut sink = Sink::new(cfg.clone(), "mps-export", generated_at)?;
    for &f in forms {
        for &a in &cfg.alphas {
            let lp = match f {
                Formulation::Full => build_full_lp(&s.surface, a)?,
                _ => build_reduced_lp(&s.surface, a)?,
            };
            let extra = [("alpha", json!(a)), ("formulation", json!(f)), ("rows", json!(s.surface.num_market())), ("cols", json!(s.surface.num_credit()))];
            sink.text(&mps_file_name(f, a), "*", &extra, &to_mps_string(&lp, "WCC"))?;
        }
    }
    Ok(sink.into_written())
}
