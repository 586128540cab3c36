use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use tbps2::eop::{estimate_eop, IdentTrace};
use tbps2::sim::{run_grid_with, run_scenario};
use tbps2::{config, io};

#[derive(Parser)]
#[command(
    name = "tbps2",
    version,
    about = "Delayed teleoperation passivity stabilizer simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its per-step trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep delay x B_e and write one summary row per trial.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write every trial's trace here as trace_<delay index>_<B_e index>.csv.
        #[arg(long)]
        traces_dir: Option<PathBuf>,
    },
    /// Estimate the excess of passivity from a recorded force/velocity trace.
    Identify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "f")]
        force_column: String,
        #[arg(long, default_value = "v")]
        velocity_column: String,
        #[arg(long, default_value = "t")]
        time_column: String,
    },
}

fn identify(path: &Path, f: &str, v: &str, t: &str) -> anyhow::Result<f64> {
    let cols = io::read_columns_csv(path, &[t, f, v])?;
    let time = &cols[0];
    if time.len() < 2 {
        anyhow::bail!("{}: need at least two samples to infer dt", path.display());
    }
    let dt = (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64;
    let trace = IdentTrace::new(dt, cols[1].clone(), cols[2].clone())?;
    Ok(estimate_eop(&trace)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let scenario = config::load_scenario(&config)?;
            let trace = run_scenario(&scenario)?;
            io::write_trace_csv(&out, &trace.rows)?;
        }
        Command::Grid {
            config,
            out,
            traces_dir,
        } => {
            let file = config::load_grid(&config)?;
            if let Some(dir) = &traces_dir {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            let rows = run_grid_with(&file.grid, file.threads, |trial, trace| {
                if let Some(dir) = &traces_dir {
                    let name = format!("trace_{:02}_{:02}.csv", trial.delay_index, trial.be_index);
                    io::write_trace_csv(&dir.join(name), &trace.rows)?;
                }
                Ok(())
            })?;
            io::write_summary_csv(&out, &rows)?;
        }
        Command::Identify {
            trace,
            force_column,
            velocity_column,
            time_column,
        } => {
            let xi = identify(&trace, &force_column, &velocity_column, &time_column)?;
            println!("{xi}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
