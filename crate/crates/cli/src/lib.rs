//! Command-line entry points: `train`, `process`, `eval`, `flops`,
//! `synth-data`.
//!
//! Every command reads its inputs from a flat key=value configuration
//! (optional `--config PATH` file plus repeated `--override K=V` flags) and
//! the shared flags `--seed N`, `--out DIR`, `--quiet`. Outputs carry no
//! timestamps, so reruns with the same configuration are byte-identical.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

mod commands;
mod config;

use optossm::{Error, ErrorKind};

pub use commands::run_command;
pub use config::{CliConfig, Command};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

pub fn exit_code_for(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Numeric => EXIT_NUMERIC,
    }
}

/// Parses arguments, runs the command, reports errors on stderr.
pub fn run(args: &[String]) -> u8 {
    let cfg = match CliConfig::parse(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    match run_command(&cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub const USAGE: &str = "\
usage: optossm <command> [--config PATH] [--override K=V]... [--seed N] [--out DIR] [--quiet]

commands:
  train       train a model     (keys: manifest, arch, device, max_epochs,
              patience, batch, lr0, clip_norm, tbptt_window, validation_fraction)
  process     run a model over a WAV (keys: weights, input, output, controls, chunk)
  eval        metric report over a manifest (keys: weights, manifest, report)
  flops       parameter/FLOP accounting (keys: arch, device)
  synth-data  synthesize a compressor dataset (keys: source, settings, makeup)

controls are raw device values, e.g.
  cl1b: controls=threshold=-10,ratio=6,attack=0.5,release=5
  la2a: controls=peak_reduction=40,switch=1
";
