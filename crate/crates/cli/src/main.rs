//! `stccpm`: command line front end for the space-time coded CPM library.
//!
//! Exit codes: 0 success, 1 a check failed (or the run itself failed),
//! 2 invalid usage. Invalid settings are reported on stderr as a JSON
//! object naming the offending field.

mod commands;
mod config;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Failure;
use config::{Defaults, RunConfig};

#[derive(Parser)]
#[command(name = "stccpm", version, about = "L2-orthogonal space-time coded CPM toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify orthogonality and phase continuity of a code family.
    Verify(Opts),
    /// Write transmitted samples for random data as raw I/Q.
    Encode(Opts),
    /// Decode an I/Q file written by `encode`, optionally after adding noise.
    Decode(Opts),
    /// Simulate a BER curve over a fading channel.
    Ber(Opts),
    /// Welch spectra of every transmit antenna.
    Psd(Opts),
    /// BER over a grid of initial antenna phases.
    Sweep(Opts),
}

#[derive(clap::Args)]
struct Opts {
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

fn usage_error(field: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": "invalid_config", "field": field, "message": message }));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    let (name, opts): (&str, &Opts) = match &cli.command {
        Command::Verify(o) => ("verify", o),
        Command::Encode(o) => ("encode", o),
        Command::Decode(o) => ("decode", o),
        Command::Ber(o) => ("ber", o),
        Command::Psd(o) => ("psd", o),
        Command::Sweep(o) => ("sweep", o),
    };
    let defaults = Defaults {
        code: if name == "sweep" { "linpc" } else { "pc2" },
        ebn0: match name {
            "sweep" => "13",
            "decode" => "inf",
            _ => "0:2:16",
        },
    };
    let raw = match &opts.config {
        Some(path) => match RunConfig::load(path) {
            Ok(file) => file.overlay(&opts.run),
            Err(e) => return usage_error(&e.field, &e.message),
        },
        None => opts.run.clone(),
    };
    let settings = match commands::with_input_settings(&raw, &defaults) {
        Ok(s) => s,
        Err(Failure::Usage(e)) => return usage_error(&e.field, &e.message),
        Err(Failure::Check(m) | Failure::Runtime(m)) => {
            eprintln!("{}", json!({ "error": "runtime", "message": m }));
            return ExitCode::from(1);
        }
    };
    let threads = settings.threads;
    let result = stccpm::exec::with_threads(threads, || match name {
        "verify" => commands::verify(&settings),
        "encode" => commands::encode(&settings),
        "decode" => commands::decode(&settings),
        "ber" => commands::ber(&settings),
        "psd" => commands::psd(&settings),
        _ => commands::sweep(&settings),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => usage_error(&e.field, &e.message),
        Err(Failure::Check(m)) => {
            eprintln!("{}", json!({ "error": "check_failed", "message": m }));
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("{}", json!({ "error": "runtime", "message": m }));
            ExitCode::from(1)
        }
    }
}
