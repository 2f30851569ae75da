use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::Ordering;

use clap::{Parser, ValueEnum};

use chlab::experiments::{execute, load_config, Command, ExpError, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Run,
    Steady,
    Dispersion,
    Continuation,
    Compare,
    Barrier,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Run => Command::Run,
            Cmd::Steady => Command::Steady,
            Cmd::Dispersion => Command::Dispersion,
            Cmd::Continuation => Command::Continuation,
            Cmd::Compare => Command::Compare,
            Cmd::Barrier => Command::Barrier,
        }
    }
}

/// Viscous Cahn-Hilliard-Oono-chemotaxis experiments.
#[derive(Parser, Debug)]
#[command(name = "chlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 4 when a check fails.
    #[arg(long)]
    strict: bool,
    /// Overrides [init] seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match drive(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn drive(cli: &Cli) -> Result<(), ExpError> {
    let mut cfg = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.init.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    for w in cfg.model.warnings() {
        eprintln!("warning: {w}");
    }
    let mut opts = RunOptions::new(cfg.output.directory.clone());
    opts.strict = cli.strict;
    let stop = opts.stop.clone();
    // a second Ctrl-C while stopping falls back to the default behaviour
    let _ = ctrlc::set_handler(move || {
        if stop.swap(true, Ordering::Relaxed) {
            std::process::exit(130);
        }
    });
    let outcome = execute(cli.command.into(), &cfg, &opts)?;
    if let Some(c) = &outcome.check {
        println!("{}: {}", if c.passed { "check passed" } else { "check FAILED" }, c.message);
    }
    println!("outputs written to {}", outcome.out_dir.display());
    Ok(())
}
