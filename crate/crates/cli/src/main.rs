//! `irslab` — run the sensing/ISAC experiment presets from TOML configs.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when every
//! produced record was infeasible.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irslab_core::harness::{parse_config_with, run_experiment, Preset};

#[derive(Parser)]
#[command(name = "irslab", version, about = "IRS-enabled sensing and ISAC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detection probability vs reflecting-element count (closed forms).
    DetectSweep(RunArgs),
    /// Optimized angle-estimation CRB vs reflecting-element count.
    CrbSweep(RunArgs),
    /// Communication-SNR vs sensing-CRB frontier.
    IsacRegion(RunArgs),
    /// Monte-Carlo validation of the closed-form detection probabilities.
    McValidate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(preset: Preset, args: &RunArgs) -> Result<bool, irslab_core::Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        irslab_core::Error::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut cfg = parse_config_with(&text, Some(preset))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_path = out.display().to_string();
    }
    let records = run_experiment(&cfg)?;
    let feasible = records.iter().filter(|r| r.feasible).count();
    eprintln!(
        "wrote {} ({} records, {} feasible)",
        cfg.output_path,
        records.len(),
        feasible
    );
    Ok(!records.is_empty() && feasible == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (preset, args) = match &cli.command {
        Command::DetectSweep(a) => (Preset::DetectSweep, a),
        Command::CrbSweep(a) => (Preset::CrbSweep, a),
        Command::IsacRegion(a) => (Preset::IsacRegion, a),
        Command::McValidate(a) => (Preset::McValidate, a),
    };
    match run(preset, args) {
        Ok(infeasible_only) => {
            if infeasible_only {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ irslab_core::Error::Config(_)) | Err(e @ irslab_core::Error::InvalidArgument(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
