use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyrep::cli::{run, Command};
use hyrep::config::RunConfig;
use hyrep::HyrepError;

/// Hybrid continuous/discrete-variable quantum repeater simulator.
#[derive(Parser)]
#[command(name = "hyrep", version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration file with flat `key = value` entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Breeding fidelity and rate versus acceptance window (CSV).
    Fig2,
    /// Optimized repeater rate versus distance (CSV).
    Fig3,
    /// One breeding run (JSON).
    Breed,
    /// Swap acceptance and k_n values (JSON).
    Swap,
    /// Built-in checks (JSON); exits with 1 on any failure.
    Validate,
}

fn load(args: &Args) -> Result<RunConfig, HyrepError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hyrep: {e}");
            return ExitCode::from(2);
        }
    };
    let cmd = match args.command {
        Cmd::Fig2 => Command::Fig2,
        Cmd::Fig3 => Command::Fig3,
        Cmd::Breed => Command::Breed,
        Cmd::Swap => Command::Swap,
        Cmd::Validate => Command::Validate,
    };
    let out = match run(cmd, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("hyrep: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &args.out {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{}", out.text);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("hyrep: {e}");
        return ExitCode::from(2);
    }
    if out.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("hyrep: validation failed");
        ExitCode::from(1)
    }
}
