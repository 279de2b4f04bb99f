use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use sipbench::config::ExperimentConfig;
use sipbench::experiment::{self, SweepAxis};
use sipbench::{Error, Result};

/// Benchmark harness for stochastic-interpolant and diffusion surrogates of Kolmogorov flow.
#[derive(Parser)]
#[command(name = "sipbench", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the dataset.
    GenData,
    /// Train a network on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
    },
    /// Roll out a checkpoint from every validation initial condition.
    Rollout {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Score predicted rollouts against the true trajectories.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Per-timestep distribution distances.
    Distances {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train and evaluate across sampler steps or interpolant noise scales.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => {
            let cfg = ExperimentConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    experiment::init_threads()?;
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let manifest = match &cli.command {
        Command::GenData => experiment::cmd_gen_data(&cfg, &out)?,
        Command::Train { data } => experiment::cmd_train(&cfg, data, &out)?,
        Command::Rollout { ckpt, data } => experiment::cmd_rollout(&cfg, ckpt, data, &out)?,
        Command::Evaluate { pred, truth } => experiment::cmd_evaluate(&cfg, pred, truth, &out)?,
        Command::Distances { data } => experiment::cmd_distances(&cfg, data, &out)?,
        Command::Sweep { data, axis, values } => {
            experiment::cmd_sweep(&cfg, data, *axis, values, &out)?
        }
    };
    for o in &manifest.outputs {
        println!("{}", o.path.display());
    }
    Ok(())
}

fn error_record(e: &Error) -> serde_json::Value {
    let mut rec = json!({ "error": e.kind(), "message": e.to_string() });
    match e {
        Error::Io { path, .. } | Error::Format { path, .. } => {
            rec["path"] = json!(path.display().to_string());
        }
        Error::Config(list) => rec["violations"] = json!(list),
        _ => {}
    }
    rec
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::FAILURE
        }
    }
}
