use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use zeroext_cli::config::parse_window;
use zeroext_cli::{run_subcommand, Command, ConfigError, ExperimentConfig};

/// Moduli, approximation and Besov exponents of zero-extended functions.
#[derive(Debug, Parser)]
#[command(name = "zeroext", version)]
struct Args {
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// `tmin:tmax`, overrides `window`.
    #[arg(long)]
    window: Option<String>,
    /// Extra `key=value` config lines.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let mut text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?,
        None => String::new(),
    };
    for line in &args.set {
        text.push('\n');
        text.push_str(line);
    }
    let mut cfg = ExperimentConfig::parse_unchecked(&text)?;
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(w) = &args.window {
        cfg.window = Some(parse_window(w)?);
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    cfg.check()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_subcommand(args.command, &cfg) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
