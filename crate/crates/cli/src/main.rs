//! `stabilizer` command line.
//!
//! ```text
//! stabilizer run --config exp.toml [--seed N] [--runs R] [--shots S]
//!                [--chain-steps K] [--arms unmitigated,static,adaptive]
//!                [--prior uniform|configured|sequential] [--out DIR]
//! stabilizer validate-config exp.toml
//! stabilizer demo [--out DIR]
//! ```
//!
//! Exit status is 0 on success, 1 for configuration errors and 2 for
//! failures while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stabilizer_core::{run_experiment, Arm, ExperimentConfig, PriorMode};

#[derive(Parser)]
#[command(
    name = "stabilizer",
    version,
    about = "Adaptive compensation of drifting qubit errors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Parse and check a config file without running it.
    ValidateConfig { path: PathBuf },
    /// Run the default four-qubit experiment.
    Demo {
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    chain_steps: Option<usize>,
    /// Comma-separated subset of unmitigated,static,adaptive.
    #[arg(long, value_delimiter = ',')]
    arms: Option<Vec<String>>,
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<stabilizer_core::Error> for Failure {
    fn from(e: stabilizer_core::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl Overrides {
    fn apply(self, cfg: &mut ExperimentConfig) -> Result<(), Failure> {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.chain_steps {
            cfg.chain.steps = v;
        }
        if let Some(names) = self.arms {
            let mut arms = names
                .iter()
                .map(|s| s.parse::<Arm>())
                .collect::<Result<Vec<_>, _>>()?;
            arms.sort();
            arms.dedup();
            cfg.arms = arms;
        }
        if let Some(p) = self.prior {
            cfg.prior = p.parse::<PriorMode>()?;
        }
        if let Some(out) = self.out {
            cfg.output_dir = out;
        }
        cfg.validate()?;
        Ok(())
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    Ok(ExperimentConfig::from_path(path)?)
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let result = run_experiment(cfg)?;
    result.write_outputs(&cfg.output_dir)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for s in &result.summaries {
        match &s.report {
            Some(r) => println!(
                "{:<12} mean {:.4}  std {:.4}  ({} ok, {} failed)",
                s.arm.name(),
                r.mean,
                r.std,
                s.completed,
                s.failed
            ),
            None => println!(
                "{:<12} no completed runs ({} failed)",
                s.arm.name(),
                s.failed
            ),
        }
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let cfg = match cli.command {
        Command::ValidateConfig { path } => {
            let cfg = load(&path)?;
            println!(
                "ok: {} qubits, {} shots, {} runs, arms {:?}, prior {:?}",
                cfg.qubits, cfg.shots, cfg.runs, cfg.arms, cfg.prior
            );
            return Ok(());
        }
        Command::Run { config, overrides } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg)?;
            cfg
        }
        Command::Demo { overrides } => {
            let mut cfg = ExperimentConfig::default();
            overrides.apply(&mut cfg)?;
            cfg
        }
    };
    execute(&cfg).map_err(|e| match e.downcast::<stabilizer_core::Error>() {
        Ok(core) => Failure::from(core),
        Err(other) => Failure::Runtime(format!("{other:#}")),
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
