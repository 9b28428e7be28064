//! Command-line entry point: run configured experiments, inspect the
//! expert grid a dynamic run would use, and re-verify recorded bounds.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use qbench::config::ExperimentConfig;
use qbench::runner::{run_experiment, verify_bounds};
use qbound::dynamic::{build_grid, grid_mu, GridConfig};

#[derive(Parser)]
#[command(
    name = "qbench",
    version,
    about = "Benchmark harness for unbounded-domain online learners"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every (horizon, seed) cell of a JSON config and write CSV
    /// traces plus a JSON summary.
    Run {
        /// Experiment config file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the (step size, radius) expert grid for given problem
    /// constants.
    GridInfo {
        /// Regret budget at the origin.
        #[arg(long)]
        eps: f64,
        /// Gradient-norm offset bound G.
        #[arg(long)]
        gmax: f64,
        /// Gradient-norm slope bound L.
        #[arg(long)]
        lmax: f64,
        /// Horizon.
        #[arg(long = "T")]
        t: u64,
        /// Use the smooth-loss ladder.
        #[arg(long)]
        smooth: bool,
    },
    /// Re-check all bound assertions recorded in a run directory.
    VerifyBounds {
        /// Directory a `run` invocation wrote.
        #[arg(long)]
        run: PathBuf,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn join_values(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg, &out)?;
            println!("wrote {}", summary.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::GridInfo {
            eps,
            gmax,
            lmax,
            t,
            smooth,
        } => {
            let positive = |x: f64| x > 0.0 && x.is_finite();
            if !positive(eps) || !positive(gmax) || !positive(lmax) || t == 0 {
                bail!("grid-info needs eps > 0, gmax > 0, lmax > 0, T >= 1");
            }
            let mut cfg = GridConfig::new(eps, gmax, lmax, t);
            cfg.smooth = smooth;
            let (etas, ds) = build_grid(&cfg);
            let mut mu_min = f64::INFINITY;
            let mut mu_max = 0.0f64;
            for &eta in &etas {
                for &d in &ds {
                    let mu = grid_mu(d, eta, gmax);
                    mu_min = mu_min.min(mu);
                    mu_max = mu_max.max(mu);
                }
            }
            println!("horizon: {t}  smooth: {smooth}");
            println!("step sizes ({}): {}", etas.len(), join_values(&etas));
            println!("radii ({}): {}", ds.len(), join_values(&ds));
            println!("experts: {}", etas.len() * ds.len());
            println!("mu range: [{mu_min}, {mu_max}]");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::VerifyBounds { run } => {
            let ok = verify_bounds(&run)?;
            if ok {
                println!("all bound checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("bound verification FAILED");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
