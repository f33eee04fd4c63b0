//! `hs-lab`: command line driver for the Hele-Shaw laboratory.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hs_lab::kernels::SuiteCheck;

use crate::config::{load_config, Family, GridSize, RunConfig, Schedule};

/// Hele-Shaw flow on conformal surfaces of the unit disk.
///
/// Every option can also be set in a TOML file passed with `--config`;
/// flags override the file. Defaults: weight = flat (c = 1), n = 513,
/// t = 0.04,0.16,0.36,0.64, alpha = 0.5, seed = 7, out = runs.
/// HS_LAB_THREADS caps the worker threads.
#[derive(Debug, Parser)]
#[command(name = "hs-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel positivity, Laplacian identity, anchor and representation checks.
    Kernels,
    /// Flow snapshots with topology, mean-value and containment checks.
    Flow,
    /// Exponential chart of the flow about a basepoint.
    Expmap,
    /// Shoot one geodesic and check metric-speed conservation.
    Geodesic,
    /// F(r), c_{p,α} tables and the Korenblum identities.
    Korenblum,
    /// Geodesic circles of c/(1-|z|²)² + (1-|z|²)^{2α}.
    Example7,
    /// W-estimate, reproducing inequality and boundary-density checks.
    Verify,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    weight: Option<Family>,
    #[arg(long, global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// CSV grid for `--weight table`.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Grid nodes per side (odd).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Comma-separated increasing flow times.
    #[arg(long, global = true, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Comma-separated check names, or `all`.
    #[arg(long, global = true, value_delimiter = ',')]
    check: Option<Vec<String>>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Chart basepoint as `x,y`.
    #[arg(long, global = true, value_delimiter = ',')]
    z0: Option<Vec<f64>>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    n_r: Option<usize>,
    #[arg(long, global = true)]
    n_theta: Option<usize>,
    /// Geodesic start as `x,y`.
    #[arg(long, global = true, value_delimiter = ',')]
    start: Option<Vec<f64>>,
    /// Geodesic direction as `x,y`.
    #[arg(long, global = true, value_delimiter = ',')]
    dir: Option<Vec<f64>>,
    #[arg(long, global = true)]
    length: Option<f64>,
    #[arg(long, global = true)]
    step: Option<f64>,
}

fn pair(name: &str, v: &[f64]) -> Result<[f64; 2]> {
    match v {
        [x, y] => Ok([*x, *y]),
        _ => anyhow::bail!("--{name} takes two comma-separated numbers"),
    }
}

impl Common {
    fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(w) = self.weight {
            cfg.weight = w;
        }
        cfg.c = self.c.or(cfg.c);
        cfg.beta = self.beta.unwrap_or(cfg.beta);
        cfg.alpha = self.alpha.unwrap_or(cfg.alpha);
        cfg.table = self.table.clone().or(cfg.table);
        if let Some(n) = self.n {
            cfg.n = GridSize::new(n).map_err(anyhow::Error::msg)?;
        }
        if let Some(t) = &self.t {
            cfg.t = Schedule::new(t.clone()).map_err(anyhow::Error::msg)?;
        }
        if let Some(c) = &self.check {
            cfg.checks = c.clone();
        }
        cfg.kernels.samples = self.samples.unwrap_or(cfg.kernels.samples);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.out = self.out.clone().unwrap_or(cfg.out);
        if let Some(z) = &self.z0 {
            cfg.expmap.z0 = pair("z0", z)?;
        }
        cfg.expmap.r_max = self.r_max.unwrap_or(cfg.expmap.r_max);
        cfg.expmap.n_r = self.n_r.unwrap_or(cfg.expmap.n_r);
        cfg.expmap.n_theta = self.n_theta.unwrap_or(cfg.expmap.n_theta);
        if let Some(s) = &self.start {
            cfg.geodesic.start = pair("start", s)?;
        }
        if let Some(d) = &self.dir {
            cfg.geodesic.dir = pair("dir", d)?;
        }
        cfg.geodesic.length = self.length.unwrap_or(cfg.geodesic.length);
        cfg.geodesic.step = self.step.unwrap_or(cfg.geodesic.step);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HS_LAB_THREADS") {
        let k: usize = v
            .trim()
            .parse()
            .with_context(|| format!("HS_LAB_THREADS = {v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let base = match &cli.common.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let cfg = cli.common.apply(base)?;
    let dir = cfg.out.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = match cli.command {
        Command::Kernels => {
            let check = match cfg.checks.as_slice() {
                [] => SuiteCheck::All,
                [one] => one.parse()?,
                _ => anyhow::bail!("kernels takes a single --check"),
            };
            commands::kernels(&cfg, &dir, check)?
        }
        Command::Flow => commands::flow(&cfg, &dir)?,
        Command::Expmap => commands::expmap(&cfg, &dir)?,
        Command::Geodesic => commands::geodesic(&cfg, &dir)?,
        Command::Korenblum => commands::korenblum(&cfg, &dir)?,
        Command::Example7 => commands::example7(&cfg, &dir)?,
        Command::Verify => commands::verify(&cfg, &dir)?,
    };
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n",
    )?;
    print!("{}", report.render_table());
    Ok(!report.any_failed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
