//! `dqn`: experiment runner for the distributed second-order solver.
//!
//! Every subcommand reads a JSON experiment config (see `configs/` for
//! examples) and writes deterministic artifacts into the output directory.
//! Exit codes: 0 on success, 1 on a configuration error, 2 on a runtime
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dqn_core::harness::{
    build_model, load_config, run_alpha_sweep, run_compare, run_histogram, run_single,
    spec_constants, write_histogram, write_outputs, write_sweep, ExperimentSpec, HarnessError,
};

#[derive(Parser)]
#[command(name = "dqn", about = "Distributed second-order solver with node idling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed overriding every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (defaults to the config's out_dir, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the generated problem and weighted graph to files.
    Generate,
    /// Print the bound-constants report for the configured parameters.
    Constants,
    /// Run the first configured schedule once and write its trace.
    Run,
    /// Run every configured schedule under matched seeds.
    Compare,
    /// Multi-path cost-to-target study with an always-on reference.
    Histogram,
    /// Limiting accuracy across the configured alpha grid.
    Sweep,
}

fn load(cli: &Cli) -> Result<ExperimentSpec, HarnessError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut spec = load_config(path)?;
    if let Some(seed) = cli.seed {
        spec = spec.with_master_seed(seed);
    }
    Ok(spec)
}

fn out_dir(cli: &Cli, spec: &ExperimentSpec) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| spec.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let spec = load(cli)?;
    match cli.command {
        Command::Generate => {
            let dir = out_dir(cli, &spec);
            std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io {
                path: dir.clone(),
                source: e,
            })?;
            let model = build_model(&spec)?;
            let hash = spec.config_hash();
            let problem_path = dir.join(format!("{hash}_problem.json"));
            std::fs::write(&problem_path, model.problem.to_json()).map_err(|e| {
                HarnessError::Io {
                    path: problem_path.clone(),
                    source: e,
                }
            })?;
            let edges_path = dir.join(format!("{hash}_graph.edges"));
            std::fs::write(&edges_path, model.graph.export_edge_list()).map_err(|e| {
                HarnessError::Io {
                    path: edges_path.clone(),
                    source: e,
                }
            })?;
            println!("{}", problem_path.display());
            println!("{}", edges_path.display());
        }
        Command::Constants => {
            let model = build_model(&spec)?;
            print!("{}", spec_constants(&spec, &model)?.report());
        }
        Command::Run => {
            let run = run_single(&spec)?;
            let files = write_outputs(std::slice::from_ref(&run), &spec, &out_dir(cli, &spec))?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Compare => {
            let outcome = run_compare(&spec)?;
            let files = write_outputs(&outcome.runs, &spec, &out_dir(cli, &spec))?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Histogram => {
            let outcome = run_histogram(&spec)?;
            let file = write_histogram(&outcome, &spec, &out_dir(cli, &spec))?;
            println!("{}", file.display());
        }
        Command::Sweep => {
            let rows = run_alpha_sweep(&spec)?;
            let file = write_sweep(&rows, &spec, &out_dir(cli, &spec))?;
            println!("{}", file.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ HarnessError::Config(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
