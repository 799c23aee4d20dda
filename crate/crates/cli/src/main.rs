use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cpi_core::io::{
    configure_threads, load_config, parse_length, run_analyze, run_psf, run_refocus, run_simulate, Artifacts,
    Engine, ExperimentConfig, Overrides, RefocusJob,
};
use cpi_core::refocus::Interpolation;

/// Correlation plenoptic imaging simulator.
///
/// Set CPI_THREADS to cap the worker threads.
#[derive(Parser)]
#[command(name = "cpi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Γ and write the tensor, images and metrics.
    Simulate(RunArgs),
    /// Refocus a stored tensor and write the refocused image.
    Refocus(RefocusArgs),
    /// Write the depth-of-field and resolution report.
    Analyze(CommonArgs),
    /// Measure the focused point-object image.
    Psf(RunArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long)]
    frames: Option<u64>,
    /// Refocus target replacing the config's list, e.g. `50mm`.
    #[arg(long, value_parser = length)]
    zb: Option<f64>,
}

#[derive(Args)]
struct RefocusArgs {
    /// CPIG tensor written by `simulate`.
    #[arg(long)]
    gamma: PathBuf,
    /// Configuration of the recorded run; enables visibility and NCC.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Object distance to refocus on (defaults to the tensor's z_b).
    #[arg(long, value_parser = length)]
    zb: Option<f64>,
    #[arg(long, value_enum, default_value = "linear")]
    interp: InterpArg,
    #[arg(long, default_value = "out/refocus")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Analytic,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpArg {
    Linear,
    Nearest,
}

fn length(s: &str) -> std::result::Result<f64, String> {
    match parse_length(s)? {
        v if v > 0.0 => Ok(v),
        v => Err(format!("positive length required, got {v}")),
    }
}

fn load(common: &CommonArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let config =
        load_config(&common.config).with_context(|| format!("reading {}", common.config.display()))?;
    let out = common.out.clone().unwrap_or_else(|| config.output.clone());
    Ok((config, out))
}

fn load_run(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let (config, out) = load(&args.common)?;
    let overrides = Overrides {
        seed: args.seed,
        engine: args.engine.map(|e| match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Mc => Engine::MonteCarlo,
        }),
        frames: args.frames,
        z_b: None,
    };
    let mut config = config.with_overrides(&overrides)?;
    if let Some(zb) = args.zb {
        config.refocus = vec![zb];
    }
    Ok((config, out))
}

fn report(out: &Path, artifacts: &Artifacts) {
    for row in &artifacts.report.rows {
        println!("{:<32} {:>14.6e} {}", row.name, row.value, row.unit);
    }
    println!("wrote {} files to {}", artifacts.files.len(), out.display());
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(args) => {
            let (config, out) = load_run(&args)?;
            report(&out, &run_simulate(&config, &out).context("simulate failed")?);
        }
        Command::Psf(args) => {
            let (config, out) = load_run(&args)?;
            report(&out, &run_psf(&config, &out).context("psf failed")?);
        }
        Command::Analyze(args) => {
            let (config, out) = load(&args)?;
            report(&out, &run_analyze(&config, &out).context("analyze failed")?);
        }
        Command::Refocus(args) => {
            let config = args
                .config
                .as_deref()
                .map(|p| load_config(p).with_context(|| format!("reading {}", p.display())))
                .transpose()?;
            let job = RefocusJob {
                target: args.zb,
                interpolation: match args.interp {
                    InterpArg::Linear => Interpolation::Linear,
                    InterpArg::Nearest => Interpolation::Nearest,
                },
                config: config.as_ref(),
            };
            let artifacts = run_refocus(&args.gamma, &job, &args.out)
                .with_context(|| format!("refocusing {}", args.gamma.display()))?;
            report(&args.out, &artifacts);
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
