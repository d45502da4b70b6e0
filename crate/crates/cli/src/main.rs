use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rhucrl_cli::commands::{run_checks, run_evaluate, run_sweep, run_train, AxisSpec, EvalOverrides};
use rhucrl_cli::config::RunConfig;
use rhucrl_cli::error::{CliError, CliResult};

/// Robust model-based reinforcement learning experiments.
#[derive(Parser)]
#[command(name = "rhucrl", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the episodic training loop from a config file.
    Train(TrainArgs),
    /// Evaluate a finished run's output policy against worst-case adversaries.
    Evaluate(EvaluateArgs),
    /// Train+evaluate across an axis of setting values and seeds.
    Sweep(SweepArgs),
    /// Run the fixed-seed property suites and print a pass/fail table.
    Checks(ChecksArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Path to the run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress per-episode progress lines.
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Path to a run manifest produced by `train`.
    #[arg(long)]
    manifest: PathBuf,
    /// Optional evaluation override file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the evaluation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate even if the config hash does not match.
    #[arg(long, default_value_t = false)]
    force: bool,
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Template run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Axis spec, e.g. `alpha=0.1,0.2,0.3` or `parameter=0.5,1.0,1.5`.
    #[arg(long)]
    axis: String,
    /// Seeds per axis value.
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for cells and the aggregate CSV.
    #[arg(long)]
    out: PathBuf,
    /// Override the template master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ChecksArgs {
    /// Seed of the fixed-seed suites.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => {
            let mut config = RunConfig::from_path(&args.config)?;
            if let Some(seed) = args.seed {
                config.run.master_seed = seed;
            }
            if let Some(out) = args.out {
                config.run.output_dir = out.to_string_lossy().to_string();
            }
            let outcome = run_train(&config, args.quiet)?;
            if config.run.episodes == 0 {
                return Err(CliError::usage(
                    "episodes = 0: wrote an empty run (header-only CSV, no output policy)",
                ));
            }
            println!(
                "run complete: {} episodes, manifest at {}",
                outcome.manifest.episodes_completed,
                outcome.dir.join("manifest.json").display()
            );
            Ok(())
        }
        Command::Evaluate(args) => {
            let mut overrides = match &args.config {
                Some(path) => EvalOverrides::from_path(path)?,
                None => EvalOverrides::default(),
            };
            if args.seed.is_some() {
                overrides.seed = args.seed;
            }
            let written = run_evaluate(&args.manifest, &overrides, args.force, args.quiet)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let mut template = RunConfig::from_path(&args.config)?;
            if let Some(seed) = args.seed {
                template.run.master_seed = seed;
            }
            let axis = AxisSpec::parse(&args.axis)?;
            let path = run_sweep(&template, &axis, args.seeds, args.workers, &args.out, true)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Checks(args) => run_checks(args.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version print and exit cleanly; real usage errors exit 1
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
