use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sn_bench::plan::MODELS;
use sn_bench::{fetch, write_outputs, BenchError, Experiment, ExperimentPlan, Overrides, EXIT_BUDGET};
use stochastic_newton::optimizers::ALGORITHMS;

// stdout may be a closed pipe (`sn-bench list-models | head -1`)
macro_rules! out {
    ($($arg:tt)*) => {
        let _ = writeln!(std::io::stdout(), $($arg)*);
    };
}

#[derive(Parser)]
#[command(name = "sn-bench", version, about = "Run stochastic Newton benchmark plans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a plan and write curves.csv, curves.svg and record.json.
    Run {
        plan: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Check a plan without running it.
    Validate {
        plan: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// List available models.
    ListModels,
    /// List available algorithms.
    ListAlgorithms,
    /// Download a LIBSVM dataset (mushrooms, phishing, covtype).
    FetchData {
        name: String,
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct OverrideArgs {
    /// Root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<u64>,
    /// Output directory (default: the plan's, else `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for replications.
    #[arg(long)]
    jobs: Option<usize>,
    /// Number of log-spaced checkpoints.
    #[arg(long)]
    checkpoints: Option<usize>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            replications: a.reps,
            out_dir: a.out_dir,
            jobs: a.jobs,
            checkpoints: a.checkpoints,
        }
    }
}

fn load(path: &Path, overrides: OverrideArgs) -> Result<ExperimentPlan, BenchError> {
    let mut plan = ExperimentPlan::load(path)?;
    plan.apply(&overrides.into());
    Ok(plan)
}

fn run(cli: Cli) -> Result<ExitCode, BenchError> {
    match cli.command {
        Command::Run { plan, overrides } => {
            let plan = load(&plan, overrides)?;
            let out_dir = plan.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            let exp = Experiment::prepare(plan)?;
            for w in &exp.warnings {
                eprintln!("warning: {w}");
            }
            let record = exp.run()?;
            write_outputs(&record, &out_dir)?;
            for s in &record.summaries {
                let terminal: Vec<String> = s
                    .curves
                    .iter()
                    .filter_map(|(m, c)| c.mean.last().map(|v| format!("{}={v:.4e}", m.as_str())))
                    .collect();
                out!(
                    "{:<10} ok {:>4}  failed {:>4}  {}",
                    s.label,
                    s.successes,
                    s.failures.len(),
                    terminal.join("  ")
                );
            }
            out!("wrote {}", out_dir.display());
            let over = record.over_budget();
            if over.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for s in over {
                    eprintln!(
                        "error: {} failed in {} of {} replications",
                        s.label,
                        s.failures.len(),
                        s.successes + s.failures.len() as u64
                    );
                }
                Ok(ExitCode::from(EXIT_BUDGET))
            }
        }
        Command::Validate { plan, overrides } => {
            let plan = load(&plan, overrides)?;
            let (algorithms, warnings) = plan.validate()?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let labels: Vec<&str> = algorithms.iter().map(|a| a.label.as_str()).collect();
            out!("ok: model {}, algorithms {}", plan.model.name(), labels.join(", "));
            Ok(ExitCode::SUCCESS)
        }
        Command::ListModels => {
            for (name, about) in MODELS {
                out!("{name:<10} {about}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ListAlgorithms => {
            for name in ALGORITHMS {
                out!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::FetchData { name, out_dir } => {
            let path = fetch::fetch(&name, &out_dir)?;
            out!("saved {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
