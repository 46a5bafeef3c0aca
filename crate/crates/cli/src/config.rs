//! Flag and key=value configuration parsing.

use optossm::{Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Process,
    Eval,
    Flops,
    SynthData,
}

impl Command {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Command::Train),
            "process" => Ok(Command::Process),
            "eval" => Ok(Command::Eval),
            "flops" => Ok(Command::Flops),
            "synth-data" => Ok(Command::SynthData),
            other => Err(Error::Config(format!(
                "unknown command `{other}`\n{}",
                crate::USAGE
            ))),
        }
    }

    /// Keys each command accepts; anything else is rejected.
    pub fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Command::Train => &[
                "manifest",
                "arch",
                "device",
                "max_epochs",
                "patience",
                "batch",
                "lr0",
                "clip_norm",
                "tbptt_window",
                "validation_fraction",
            ],
            Command::Process => &["weights", "input", "output", "controls", "chunk"],
            Command::Eval => &["weights", "manifest", "report"],
            Command::Flops => &["arch", "device"],
            Command::SynthData => &["source", "settings", "makeup"],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub command: Command,
    pub keys: BTreeMap<String, String>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl CliConfig {
    pub fn parse(args: &[String]) -> Result<CliConfig> {
        let mut it = args.iter();
        let command = Command::parse(
            it.next()
                .ok_or_else(|| Error::Config(format!("missing command\n{}", crate::USAGE)))?,
        )?;
        let mut keys: BTreeMap<String, String> = BTreeMap::new();
        let mut overrides: Vec<(String, String)> = Vec::new();
        let mut seed = 0u64;
        let mut out_dir = PathBuf::from(".");
        let mut quiet = false;

        let next_value = |flag: &str, it: &mut std::slice::Iter<String>| -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| Error::Config(format!("flag {flag} needs a value")))
        };

        while let Some(arg) = it.next() {
            match arg.as_str() {
                "--config" => {
                    let path = next_value("--config", &mut it)?;
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
                    for (lineno, line) in text.lines().enumerate() {
                        let line = line.trim();
                        if line.is_empty() || line.starts_with('#') {
                            continue;
                        }
                        let (k, v) = line.split_once('=').ok_or_else(|| {
                            Error::Config(format!("config line {} is not key=value", lineno + 1))
                        })?;
                        keys.insert(k.trim().to_string(), v.trim().to_string());
                    }
                }
                "--override" => {
                    let kv = next_value("--override", &mut it)?;
                    let (k, v) = kv.split_once('=').ok_or_else(|| {
                        Error::Config(format!("--override expects K=V, got `{kv}`"))
                    })?;
                    overrides.push((k.to_string(), v.to_string()));
                }
                "--seed" => {
                    let v = next_value("--seed", &mut it)?;
                    seed = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed `{v}`")))?;
                }
                "--out" => out_dir = PathBuf::from(next_value("--out", &mut it)?),
                "--quiet" => quiet = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown flag `{other}`\n{}",
                        crate::USAGE
                    )))
                }
            }
        }
        for (k, v) in overrides {
            keys.insert(k, v);
        }
        for k in keys.keys() {
            if !command.allowed_keys().contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "unknown key `{k}` for this command (allowed: {})",
                    command.allowed_keys().join(", ")
                )));
            }
        }
        Ok(CliConfig {
            command,
            keys,
            seed,
            out_dir,
            quiet,
        })
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.keys
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.keys.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.keys.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{v}` for key `{key}`"))),
        }
    }

    pub fn log(&self, msg: std::fmt::Arguments) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}
