//! Experiment registry and runners.
//!
//! Each experiment reproduces one figure-grade dataset at desk scale
//! and writes a CSV with a fixed column set. Runs are deterministic in
//! the config (including the master seed): identical inputs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use csigame_core::{
    centralized_optimum, csma_throughput, sweep_price, CsmaModel, FeedbackGame, GameConfig,
    Protocol, RateProfile, SweepMode,
};

/// Fixed peer rates probed by the utility-curve experiments.
pub const PEER_RATES: [f64; 3] = [1.0, 3.0, 10.0];

/// Grid resolution of the utility-curve experiments.
pub const CURVE_POINTS: usize = 200;

/// Offered-load grid of the contention-throughput experiment.
pub const LOAD_POINTS: usize = 400;
pub const LOAD_MAX: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: GameConfig,
    pub out_path: PathBuf,
    pub delta_alpha: f64,
    pub alpha_max: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Outcome {
    /// Price points (or runs) whose dynamics hit the round cap.
    pub warnings: usize,
}

pub struct Experiment {
    pub name: &'static str,
    pub describes: &'static str,
    runner: fn(&RunContext) -> Result<Outcome>,
}

/// Stable, ordered experiment registry.
pub const REGISTRY: [Experiment; 8] = [
    Experiment {
        name: "utility-curve-fdma",
        describes: "two-user utility vs own feedback rate, peer fixed at 1/3/10 bits, orthogonal feedback",
        runner: run_utility_curve_fdma,
    },
    Experiment {
        name: "utility-curve-csma",
        describes: "two-user utility vs own feedback rate, peer fixed at 1/3/10 bits, contention feedback",
        runner: run_utility_curve_csma,
    },
    Experiment {
        name: "price-sweep-fdma",
        describes: "equilibrium utilities and rates across the price range, orthogonal feedback",
        runner: run_price_sweep_fdma,
    },
    Experiment {
        name: "price-sweep-csma",
        describes: "equilibrium utilities and rates across the price range, contention feedback",
        runner: run_price_sweep_csma,
    },
    Experiment {
        name: "uplink-occupancy",
        describes: "uplink bandwidth and per-user rates across the price range",
        runner: run_uplink_occupancy,
    },
    Experiment {
        name: "centralized-compare-fdma",
        describes: "priced-game sum utility vs the centralized optimum, orthogonal feedback",
        runner: run_centralized_compare_fdma,
    },
    Experiment {
        name: "centralized-compare-csma",
        describes: "priced-game sum utility vs the centralized optimum, contention feedback",
        runner: run_centralized_compare_csma,
    },
    Experiment {
        name: "csma-curve",
        describes: "slotted 1-persistent contention throughput vs offered load",
        runner: run_csma_curve,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

pub fn run(name: &str, ctx: &RunContext) -> Result<Outcome> {
    let exp = find(name).with_context(|| {
        let names: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        format!("unknown experiment `{name}`; known: {}", names.join(", "))
    })?;
    (exp.runner)(ctx)
}

/// 12 significant digits, scientific: enough to round-trip the values
/// that matter while keeping files byte-stable.
pub fn sig(x: f64) -> String {
    format!("{:.11e}", x)
}

/// Writes through a temp file in the target directory and renames, so
/// readers never observe a half-written CSV.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn force_fdma(cfg: &mut GameConfig) {
    cfg.protocol = Protocol::Fdma;
}

fn force_csma(cfg: &mut GameConfig) -> Result<()> {
    cfg.protocol = Protocol::Csma;
    if cfg.csma.is_none() {
        cfg.csma = Some(CsmaModel::new(1.0, 0.1)?);
    }
    Ok(())
}

/// Two-user scenario of the utility-curve experiments.
fn two_user(cfg: &GameConfig) -> GameConfig {
    GameConfig { n_s: 2, n_t: 2, ..cfg.clone() }
}

fn utility_curve(cfg: GameConfig, out: &Path) -> Result<Outcome> {
    let game = FeedbackGame::new(cfg)?;
    let r_max = game.config().r_max;
    let mut csv = String::from("r_probe,utility,fixed_other_rate\n");
    for &peer in &PEER_RATES {
        for i in 0..CURVE_POINTS {
            let r1 = r_max * i as f64 / (CURVE_POINTS - 1) as f64;
            let profile = RateProfile::new(vec![r1, peer])?;
            let u = game.expected_utility(0, &profile)?;
            writeln!(csv, "{},{},{}", sig(r1), sig(u), sig(peer)).unwrap();
        }
    }
    write_atomic(out, &csv)?;
    Ok(Outcome::default())
}

fn run_utility_curve_fdma(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = two_user(&ctx.cfg);
    force_fdma(&mut cfg);
    utility_curve(cfg, &ctx.out_path)
}

fn run_utility_curve_csma(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = two_user(&ctx.cfg);
    force_csma(&mut cfg)?;
    utility_curve(cfg, &ctx.out_path)
}

fn price_sweep(cfg: GameConfig, ctx: &RunContext, out: &Path) -> Result<Outcome> {
    let game = FeedbackGame::new(cfg)?;
    let sweep = sweep_price(&game, ctx.delta_alpha, ctx.alpha_max, SweepMode::FullCurve)?;
    let n = game.config().n_s;
    let mut csv = String::from("alpha,sum_rate,sum_priced_utility,uplink_bw,converged,rounds");
    for k in 1..=n {
        write!(csv, ",r_{k}").unwrap();
    }
    for k in 1..=n {
        write!(csv, ",u_{k}").unwrap();
    }
    csv.push('\n');
    for rec in &sweep.records {
        write!(
            csv,
            "{},{},{},{},{},{}",
            sig(rec.alpha_price),
            sig(rec.sum_rate),
            sig(rec.sum_priced),
            sig(rec.uplink_bw),
            u8::from(rec.equilibrium.converged),
            rec.equilibrium.rounds
        )
        .unwrap();
        for &r in rec.equilibrium.rates.rates() {
            write!(csv, ",{}", sig(r)).unwrap();
        }
        for &u in &rec.equilibrium.utilities {
            write!(csv, ",{}", sig(u)).unwrap();
        }
        csv.push('\n');
    }
    write_atomic(out, &csv)?;
    Ok(Outcome { warnings: sweep.non_converged })
}

fn run_price_sweep_fdma(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = ctx.cfg.clone();
    force_fdma(&mut cfg);
    price_sweep(cfg, ctx, &ctx.out_path)
}

fn run_price_sweep_csma(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = ctx.cfg.clone();
    force_csma(&mut cfg)?;
    price_sweep(cfg, ctx, &ctx.out_path)
}

fn run_uplink_occupancy(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = ctx.cfg.clone();
    force_fdma(&mut cfg);
    let game = FeedbackGame::new(cfg)?;
    let sweep = sweep_price(&game, ctx.delta_alpha, ctx.alpha_max, SweepMode::FullCurve)?;
    let occupancy = csigame_core::uplink_occupancy_curve(&sweep);
    let n = game.config().n_s;
    let mut csv = String::from("alpha,uplink_bw");
    for k in 1..=n {
        write!(csv, ",r_{k}").unwrap();
    }
    csv.push('\n');
    for point in &occupancy {
        write!(csv, "{},{}", sig(point.alpha_price), sig(point.uplink_bw)).unwrap();
        for &r in &point.rates {
            write!(csv, ",{}", sig(r)).unwrap();
        }
        csv.push('\n');
    }
    write_atomic(&ctx.out_path, &csv)?;
    Ok(Outcome { warnings: sweep.non_converged })
}

fn centralized_compare(cfg: GameConfig, ctx: &RunContext, out: &Path) -> Result<Outcome> {
    let game = FeedbackGame::new(cfg)?;
    let sweep = sweep_price(&game, ctx.delta_alpha, ctx.alpha_max, SweepMode::FullCurve)?;
    let central = centralized_optimum(&game)?;
    let mut csv = String::from("alpha,nfcp_sum_utility,centralized_sum_utility,is_alpha_best\n");
    for rec in &sweep.records {
        writeln!(
            csv,
            "{},{},{},{}",
            sig(rec.alpha_price),
            sig(rec.sum_rate),
            sig(central.sum_utility),
            u8::from(rec.alpha_price == sweep.alpha_best)
        )
        .unwrap();
    }
    write_atomic(out, &csv)?;
    Ok(Outcome { warnings: sweep.non_converged })
}

fn run_centralized_compare_fdma(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = ctx.cfg.clone();
    force_fdma(&mut cfg);
    centralized_compare(cfg, ctx, &ctx.out_path)
}

fn run_centralized_compare_csma(ctx: &RunContext) -> Result<Outcome> {
    let mut cfg = ctx.cfg.clone();
    force_csma(&mut cfg)?;
    centralized_compare(cfg, ctx, &ctx.out_path)
}

fn run_csma_curve(ctx: &RunContext) -> Result<Outcome> {
    let model = match &ctx.cfg.csma {
        Some(m) => m.clone(),
        None => CsmaModel::new(1.0, 0.1)?,
    };
    let mut csv = String::from("g,s\n");
    for i in 1..=LOAD_POINTS {
        let g = LOAD_MAX * i as f64 / LOAD_POINTS as f64;
        let s = csma_throughput(g, &model)?;
        writeln!(csv, "{},{}", sig(g), sig(s)).unwrap();
    }
    write_atomic(&ctx.out_path, &csv)?;
    Ok(Outcome::default())
}

/// Regularization diagnostic: sum utility at a fixed symmetric profile
/// across a grid of psi values, bracketing the built-in default.
pub fn run_psi_grid(cfg: &GameConfig, probe_rate: f64, out: &Path) -> Result<Outcome> {
    let base = cfg.n_s as f64 * cfg.n0;
    let factors = [0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let mut csv = String::from("psi,probe_rate,sum_utility\n");
    for &f in &factors {
        let mut cfg = cfg.clone();
        cfg.psi_override = Some(f * base);
        let game = FeedbackGame::new(cfg)?;
        let profile = RateProfile::uniform(game.config().n_s, probe_rate)?;
        let sum: f64 = match game.expected_utilities(&profile) {
            Ok(u) => u.iter().sum(),
            // Plain inversion can be singular on some draws; report it
            // as an absent point rather than aborting the grid.
            Err(csigame_core::Error::SingularChannel { .. }) => f64::NAN,
            Err(e) => bail!(e),
        };
        writeln!(csv, "{},{},{}", sig(f * base), sig(probe_rate), sig(sum)).unwrap();
    }
    write_atomic(out, &csv)?;
    Ok(Outcome::default())
}
