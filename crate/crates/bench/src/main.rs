use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use difftransfer::landscape::{record_landscape, write_landscape_csv, GridSpec};
use difftransfer::record::distance_unit;
use difftransfer::{aggregate, exit, gradcheck, load_records, persist, run_experiment, BenchError, ExperimentConfig, RunRecord};

#[derive(Parser)]
#[command(name = "difftransfer", version, about = "Skill-transfer experiments by differentiable simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config once per seed and persist the records.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds; overrides the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory; defaults to the config's `out_dir`, then `runs/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean and standard deviation of N and d per (task, method).
    Aggregate {
        /// Record files or directories of records.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the reward-model landscape of a planner record as CSV.
    Landscape {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "41x41")]
        grid: GridSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it and print its hash.
    ValidateConfig { config: PathBuf },
    /// Compare rollout gradients with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, BenchError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| BenchError::Usage(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn summary(r: &RunRecord) -> String {
    let d = r.d.map_or("-".into(), |d| format!("{d:.4}"));
    let status = if r.success { "success" } else { "failure" };
    format!(
        "{} {} seed {}: {status} N={} d={d} {}",
        r.task,
        r.method.name(),
        r.seed,
        r.n,
        distance_unit(r.config.kind)
    )
}

fn run(cli: Cli) -> Result<i32, BenchError> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.validate()?;
            let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
            let dir = out
                .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| Path::new("runs").join(&cfg.name));
            let records = run_experiment(&cfg, &seeds)?;
            persist(&dir, &records)?;
            for r in &records {
                println!("{}", summary(r));
            }
            println!("records written to {}", dir.display());
            Ok(if records.iter().all(|r| r.success) { exit::OK } else { exit::PLANNING_FAILURE })
        }
        Command::Aggregate { inputs, out } => {
            let table = aggregate(&load_records(&inputs)?)?;
            table.write_csv(output(out.as_deref())?)?;
            Ok(exit::OK)
        }
        Command::Landscape { run, grid, out } => {
            let land = record_landscape(&RunRecord::load(&run)?, grid)?;
            write_landscape_csv(&land, output(out.as_deref())?)?;
            Ok(exit::OK)
        }
        Command::ValidateConfig { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.validate()?;
            println!("{} ok, hash {}", cfg.name, cfg.hash()?);
            Ok(exit::OK)
        }
        Command::Gradcheck { trials, seed } => {
            let report = gradcheck::gradcheck(trials, seed)?;
            println!(
                "{} trials, {} failed, worst error/tolerance {:.3e}",
                report.trials.len(),
                report.failures(),
                report.worst_ratio()
            );
            Ok(if report.failures() == 0 { exit::OK } else { exit::NUMERIC })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
