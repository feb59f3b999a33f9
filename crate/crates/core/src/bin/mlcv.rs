use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mlcv::driver::{cmd_compare, cmd_estimate, cmd_pilot, Overrides, RunConfig};
use mlcv::mlmc::Method;

/// Multilevel Monte Carlo with low-rank control variates.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Pilot run: statistics, reduced bases and sample plans.
    Pilot { config: PathBuf },
    /// Main runs for every epsilon in the config.
    Estimate {
        config: PathBuf,
        /// mc, mlmc or mlcv; defaults to the methods in the config.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Cost table of MC, MLMC and MLCV over the epsilon list.
    Compare { config: PathBuf },
}

fn run(cli: Cli) -> mlcv::Result<()> {
    let overrides = Overrides {
        seed: cli.seed,
        out_dir: cli.out_dir,
        threads: cli.threads,
    };
    let load = |path: &PathBuf| -> mlcv::Result<RunConfig> {
        let mut cfg = RunConfig::load(path)?;
        cfg.apply(&overrides)?;
        Ok(cfg)
    };
    match &cli.command {
        Command::Pilot { config } => {
            let cfg = load(config)?;
            let report = cmd_pilot(&cfg)?;
            for l in &report.levels {
                println!(
                    "level {}: var_y={:.4e} rho2={:.4} rank={} cost={}",
                    l.level, l.var_y, l.rho2, l.rank, l.cost
                );
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote pilot artifacts to {}", cfg.output_dir.display());
        }
        Command::Estimate { config, method } => {
            let cfg = load(config)?;
            for r in cmd_estimate(&cfg, *method)? {
                println!(
                    "{} eps={} estimate={:.10e} cost={:.6e} ratio_to_mlmc={:.4}",
                    r.method.as_str(),
                    r.epsilon,
                    r.totals.estimate,
                    r.totals.cost,
                    r.totals.cost_ratio
                );
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
            }
        }
        Command::Compare { config } => {
            let cfg = load(config)?;
            for row in cmd_compare(&cfg)? {
                println!(
                    "eps={} mc={} mlmc={:.6e} mlcv={:.6e} ratio={:.4}",
                    row.epsilon,
                    row.cost_mc.map_or("-".into(), |c| format!("{c:.6e}")),
                    row.cost_mlmc,
                    row.cost_mlcv,
                    row.ratio
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
