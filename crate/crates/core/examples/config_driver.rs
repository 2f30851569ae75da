//! Drives one experiment from an INI config, as the `chlab` binary does.
//!
//! ```text
//! cargo run --release --example config_driver -- configs/dispersion.ini dispersion
//! ```

use chlab::experiments::{execute, load_config, Command, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/dispersion.ini").to_string());
    let command: Command = match args.next().unwrap_or_else(|| "dispersion".into()).parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let result = load_config(std::path::Path::new(&path))
        .map_err(Into::into)
        .and_then(|cfg| {
            let out = std::env::temp_dir().join(format!("chlab-{}", command.name()));
            execute(command, &cfg, &RunOptions::new(out))
        });
    match result {
        Ok(outcome) => {
            if let Some(check) = &outcome.check {
                println!("check {}: {}", if check.passed { "passed" } else { "failed" }, check.message);
            }
            println!("outputs in {}", outcome.out_dir.display());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
