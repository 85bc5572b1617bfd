//! Batch experiment runner for the feedback-rate game simulator.
//!
//! Exit codes: 0 on success, 2 when any equilibrium computation hit the
//! round cap (results written, flagged in the CSV), 1 on errors.

mod experiments;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use csigame_core::GameConfig;

use experiments::{RunContext, REGISTRY};

const OUT_DIR_ENV: &str = "CSIGAME_OUT_DIR";
const DEFAULT_DELTA_ALPHA: f64 = 0.005;
const DEFAULT_ALPHA_MAX: f64 = 0.2;

#[derive(Parser)]
#[command(
    name = "csigame",
    about = "Seeded experiments for feedback-rate control games with quantized CSI",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the registered experiments in their stable order.
    List,
    /// Run one experiment and write its CSV.
    Run(RunArgs),
    /// Regularization diagnostic: sum utility across a psi grid.
    PsiGrid(PsiGridArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment name (see `csigame list`).
    name: String,
    #[command(flatten)]
    common: CommonArgs,
    /// Price increment of the sweep experiments.
    #[arg(long)]
    delta_alpha: Option<f64>,
    /// Upper end of the price range.
    #[arg(long)]
    alpha_max: Option<f64>,
}

#[derive(Args)]
struct PsiGridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Symmetric feedback rate probed at every psi value.
    #[arg(long, default_value_t = 8.0)]
    probe_rate: f64,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; fields mirror the game config schema.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (default: $CSIGAME_OUT_DIR/<name>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo bank size override.
    #[arg(long)]
    mc_trials: Option<usize>,
    /// Regularization override (0 selects plain channel inversion).
    #[arg(long)]
    psi: Option<f64>,
    /// CI profile: 4 users, 100 trials.
    #[arg(long)]
    quick: bool,
}

fn load_config(args: &CommonArgs) -> Result<GameConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<GameConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => GameConfig::default(),
    };
    if args.quick {
        cfg.n_s = cfg.n_s.min(4);
        cfg.n_t = cfg.n_t.min(4).max(cfg.n_s);
        cfg.mc_trials = cfg.mc_trials.min(100);
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(mc) = args.mc_trials {
        cfg.mc_trials = mc;
    }
    if let Some(psi) = args.psi {
        cfg.psi_override = Some(psi);
    }
    Ok(cfg)
}

fn out_path(args: &CommonArgs, default_name: &str) -> PathBuf {
    match &args.out {
        Some(p) => p.clone(),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_default();
            dir.join(format!("{default_name}.csv"))
        }
    }
}

fn execute(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::List => {
            for exp in &REGISTRY {
                println!("{:26} {}", exp.name, exp.describes);
            }
            Ok(0)
        }
        Command::Run(args) => {
            let cfg = load_config(&args.common)?;
            let ctx = RunContext {
                cfg,
                out_path: out_path(&args.common, &args.name),
                delta_alpha: args.delta_alpha.unwrap_or(DEFAULT_DELTA_ALPHA),
                alpha_max: args.alpha_max.unwrap_or(DEFAULT_ALPHA_MAX),
            };
            let outcome = experiments::run(&args.name, &ctx)?;
            eprintln!("wrote {}", ctx.out_path.display());
            if outcome.warnings > 0 {
                eprintln!("warning: {} equilibrium run(s) hit the round cap", outcome.warnings);
            }
            Ok(outcome.warnings)
        }
        Command::PsiGrid(args) => {
            let cfg = load_config(&args.common)?;
            let out = out_path(&args.common, "psi-grid");
            let outcome = experiments::run_psi_grid(&cfg, args.probe_rate, &out)?;
            eprintln!("wrote {}", out.display());
            Ok(outcome.warnings)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are normal exits; usage errors are not.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
