use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wrongway_cli::commands;
use wrongway_cli::error::EXIT_OK;
use wrongway_cli::{CliError, Overrides, RunConfig};
use wrongway_core::copula_stress::LossKind;
use wrongway_core::wcc::Formulation;

#[derive(Parser)]
#[command(name = "wrongway", version, about = "Worst-case CVaR bounds for counterparty credit portfolios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Concentration, exposure band and histogram reports.
    Report(Common),
    /// Solve for the worst-case coupling at each alpha.
    Wcc(Common),
    /// Copula stress-test ratio curves and min/max tables.
    Compare(Common),
    /// Monte Carlo losses under a stored coupling.
    Simulate(Common),
    /// Write the linear programs as MPS files.
    MpsExport(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Confidence level; repeat for several.
    #[arg(long)]
    alpha: Vec<f64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    z_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z_hi: Option<f64>,
    /// full, reduced or both.
    #[arg(long)]
    formulation: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// systematic or total; repeat for both.
    #[arg(long)]
    loss_kind: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let overrides = Overrides {
            alphas: self.alpha.clone(),
            grid_n: self.grid_n,
            z_lo: self.z_lo,
            z_hi: self.z_hi,
            formulation: self.formulation.as_deref().map(str::parse::<Formulation>).transpose()?,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            loss_kinds: self.loss_kind.iter().map(|s| s.parse::<LossKind>()).collect::<Result<_, _>>()?,
        };
        cfg.apply(&overrides);
        Ok(cfg)
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (common, f): (&Common, fn(&RunConfig, &str) -> wrongway_cli::Result<Vec<PathBuf>>) = match &cli.command {
        Command::Report(c) => (c, commands::cmd_report),
        Command::Wcc(c) => (c, commands::cmd_wcc),
        Command::Compare(c) => (c, commands::cmd_compare),
        Command::Simulate(c) => (c, commands::cmd_simulate),
        Command::MpsExport(c) => (c, commands::cmd_mps_export),
    };
    let cfg = common.resolve()?;
    f(&cfg, &timestamp())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::from(EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
