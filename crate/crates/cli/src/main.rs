use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rough_taylor_cli::{resolve_out_dir, run, validate, CliError, ExperimentConfig, Kind};

/// Taylor expansions of rough differential equations: experiments and checks.
#[derive(Debug, Parser)]
#[command(name = "rough-taylor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample fractional Brownian motion paths.
    FbmSample(RunArgs),
    /// Truncated signatures of fBm or file drivers.
    Signature(RunArgs),
    /// Taylor partial sums against the reference solver and the error bound.
    TaylorConverge(RunArgs),
    /// Measured signature levels against the factorial-decay bound.
    BoundsCheck(RunArgs),
    /// Garsia-type estimates of the level-2 Hölder constant.
    Garsia(RunArgs),
    /// Stopping times of the majorised Taylor series.
    StoppingTime(RunArgs),
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON, or TOML by extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir, then $ROUGH_TAYLOR_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the config's seed list by this single seed.
    #[arg(long)]
    seed_override: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_USAGE)
    })
}

fn execute(kind: Kind, args: RunArgs) -> ExitCode {
    let mut config = match load(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if config.kind != kind {
        eprintln!("error: config is for `{}`, not `{kind}`", config.kind);
        return ExitCode::from(EXIT_USAGE);
    }
    if let Some(seed) = args.seed_override {
        config.parameters.seeds = Some(vec![seed]);
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let out = resolve_out_dir(args.out.as_deref(), &config);
    match run(&config, base, &out) {
        Ok(report) => {
            if !args.quiet {
                println!(
                    "{kind}: {} records, {} violations, {} errors -> {}",
                    report.records.len(),
                    report.violations,
                    report.errors.len(),
                    out.display()
                );
                for e in &report.errors {
                    let seed = e.seed.map(|s| format!(" (seed {s})")).unwrap_or_default();
                    eprintln!("run error{seed}: {}", e.message);
                }
            }
            if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(e @ CliError::Invalid(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = match cli.command {
        Command::FbmSample(a) => (Kind::FbmSample, a),
        Command::Signature(a) => (Kind::Signature, a),
        Command::TaylorConverge(a) => (Kind::TaylorConverge, a),
        Command::BoundsCheck(a) => (Kind::BoundsCheck, a),
        Command::Garsia(a) => (Kind::Garsia, a),
        Command::StoppingTime(a) => (Kind::StoppingTime, a),
        Command::Validate { config } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let violations = validate(&config);
            for v in &violations {
                println!("{v}");
            }
            return if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };
    execute(kind.0, kind.1)
}
