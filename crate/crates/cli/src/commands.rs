//! Command implementations.

use crate::config::{CliConfig, Command};
use optossm::blocks::ControlParams;
use optossm::data::{
    load_manifest, load_wav, save_wav, synth_compressor, test_signal, write_manifest,
    ManifestEntry, OracleSettings, RawControls, Recording, SAMPLE_RATE,
};
use optossm::metrics::{MetricValues, MetricsReport};
use optossm::model::{
    build_model, count_flops, load_weights, save_weights, Arch, Device, Model, ModelConfig,
};
use optossm::train::{render_history, save_optimizer_sidecar, train, TrainConfig};
use optossm::{Error, Result};
use std::path::{Path, PathBuf};

pub fn run_command(cfg: &CliConfig) -> Result<()> {
    match cfg.command {
        Command::Train => cmd_train(cfg),
        Command::Process => cmd_process(cfg),
        Command::Eval => cmd_eval(cfg),
        Command::Flops => cmd_flops(cfg),
        Command::SynthData => cmd_synth_data(cfg),
    }
}

fn ensure_out_dir(cfg: &CliConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    Ok(())
}

fn cmd_train(cfg: &CliConfig) -> Result<()> {
    let manifest = PathBuf::from(cfg.require("manifest")?);
    let arch = Arch::parse(cfg.require("arch")?)?;
    let device = Device::parse(cfg.require("device")?)?;
    let recordings = load_manifest(&manifest)?;
    for rec in &recordings {
        if rec.controls.device() != device {
            return Err(Error::Config(format!(
                "manifest recording `{}` is for another device",
                rec.name
            )));
        }
    }
    let train_cfg = TrainConfig {
        max_epochs: cfg.get_parsed("max_epochs", 200usize)?,
        patience: cfg.get_parsed("patience", 30usize)?,
        batch_size: cfg.get_parsed("batch", 2400usize)?,
        lr0: cfg.get_parsed("lr0", optossm::train::LR0)?,
        decay_base: optossm::train::DECAY_BASE,
        clip_norm: cfg.get_parsed("clip_norm", 1.0f64)?,
        tbptt_window: cfg.get_parsed("tbptt_window", 1usize)?,
        validation_fraction: cfg.get_parsed("validation_fraction", 0.1f64)?,
        seed: cfg.seed,
    };
    let model_cfg = ModelConfig::new(arch, device);
    let mut store = build_model(&model_cfg, cfg.seed)?;
    cfg.log(format_args!(
        "training {arch}/{device} on {} recordings ({} parameters)",
        recordings.len(),
        store.len()
    ));
    let outcome = train(&mut store, &recordings, &train_cfg)?;
    for h in &outcome.history {
        cfg.log(format_args!(
            "epoch {:>3}  train {:.6e}  val {:.6e}  lr {:.3e}",
            h.epoch, h.train_loss, h.val_loss, h.lr
        ));
    }
    ensure_out_dir(cfg)?;
    let weights_path = cfg.out_dir.join("weights.txt");
    save_weights(&store, &weights_path)?;
    std::fs::write(cfg.out_dir.join("history.tsv"), render_history(&outcome.history))?;
    save_optimizer_sidecar(&outcome.optimizer, &cfg.out_dir.join("optimizer.txt"))?;
    cfg.log(format_args!(
        "best epoch {} (val {:.6e}); weights -> {}",
        outcome.best_epoch,
        outcome.best_val_loss,
        weights_path.display()
    ));
    Ok(())
}

/// Raw control string like "threshold=-10,ratio=6,attack=0.5,release=5".
fn parse_controls(device: Device, text: &str) -> Result<ControlParams> {
    let mut kv = std::collections::BTreeMap::new();
    for part in text.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad control field `{part}`")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad control value `{v}`")))?;
        kv.insert(k.trim().to_string(), value);
    }
    let mut take = |key: &str| -> Result<f64> {
        kv.remove(key)
            .ok_or_else(|| Error::Config(format!("{device} controls need `{key}`")))
    };
    let raw = match device {
        Device::La2a => RawControls::La2a {
            peak_reduction: take("peak_reduction")?,
            limit_switch: take("switch")?,
        },
        Device::Cl1b => RawControls::Cl1b {
            threshold_dbu: take("threshold")?,
            ratio: take("ratio")?,
            attack_ms: take("attack")?,
            release_s: take("release")?,
        },
    };
    if let Some(k) = kv.keys().next() {
        return Err(Error::Config(format!("unknown control `{k}` for {device}")));
    }
    optossm::data::normalize_controls(&raw)
}

fn cmd_process(cfg: &CliConfig) -> Result<()> {
    let mut store = load_weights(Path::new(cfg.require("weights")?))?;
    let model = Model::attach(&mut store)?;
    let ctrl = parse_controls(store.config().device, cfg.require("controls")?)?;
    let input = load_wav(Path::new(cfg.require("input")?))?;
    let chunk: usize = cfg.get_parsed("chunk", 4096usize)?;
    let mut stream = model.new_stream();
    let out = model.process_stream(&store, &mut stream, &input.samples, &ctrl, chunk)?;
    let out_path = PathBuf::from(cfg.require("output")?);
    save_wav(&out_path, &out, input.sample_rate)?;
    cfg.log(format_args!(
        "processed {} samples -> {}",
        out.len(),
        out_path.display()
    ));
    Ok(())
}

fn cmd_eval(cfg: &CliConfig) -> Result<()> {
    let mut store = load_weights(Path::new(cfg.require("weights")?))?;
    let model = Model::attach(&mut store)?;
    let recordings = load_manifest(Path::new(cfg.require("manifest")?))?;
    let mut report = MetricsReport::new();
    let mut failures = Vec::new();
    for rec in &recordings {
        match eval_one(&model, &store, rec) {
            Ok(values) => report.push(rec.name.clone(), values),
            Err(e) => {
                eprintln!("warning: recording `{}` failed: {e}", rec.name);
                failures.push(rec.name.clone());
            }
        }
    }
    if report.rows().is_empty() {
        return Err(Error::Data(format!(
            "every recording failed ({} failures)",
            failures.len()
        )));
    }
    let table = report.render();
    print!("{table}");
    if let Some(path) = cfg.get("report") {
        std::fs::write(path, &table)?;
    }
    Ok(())
}

fn eval_one(model: &Model, store: &optossm::model::WeightStore, rec: &Recording) -> Result<MetricValues> {
    if rec.controls.device() != store.config().device {
        return Err(Error::Config("device mismatch".into()));
    }
    let mut stream = model.new_stream();
    let yhat = model.process_stream(store, &mut stream, &rec.input, &rec.controls, 4096)?;
    MetricValues::compute(&rec.output, &yhat)
}

fn cmd_flops(cfg: &CliConfig) -> Result<()> {
    let arch = Arch::parse(cfg.require("arch")?)?;
    let device = Device::parse(cfg.require("device")?)?;
    let report = count_flops(&ModelConfig::new(arch, device));
    print!("{}", report.render());
    Ok(())
}

fn cmd_synth_data(cfg: &CliConfig) -> Result<()> {
    let source_spec = cfg.require("source")?;
    let settings_spec = cfg.require("settings")?;
    let makeup: f64 = cfg.get_parsed("makeup", 0.0f64)?;
    ensure_out_dir(cfg)?;

    let source = if let Some(rest) = source_spec.strip_prefix("synth:") {
        let seconds: f64 = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad synth duration `{rest}`")))?;
        if seconds <= 0.0 {
            return Err(Error::Config("synth duration must be positive".into()));
        }
        test_signal(seconds, SAMPLE_RATE as f64, cfg.seed)
    } else {
        let wav = load_wav(Path::new(source_spec))?;
        if wav.sample_rate != SAMPLE_RATE {
            return Err(Error::Data(format!(
                "source must be {SAMPLE_RATE} Hz, got {}",
                wav.sample_rate
            )));
        }
        wav.samples
    };

    let input_name = "input.wav";
    save_wav(&cfg.out_dir.join(input_name), &source, SAMPLE_RATE)?;

    let mut entries = Vec::new();
    for (i, group) in settings_spec.split(';').enumerate() {
        let group = group.trim();
        if group.is_empty() {
            continue;
        }
        let mut kv = std::collections::BTreeMap::new();
        for part in group.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad setting field `{part}`")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad setting value `{v}`")))?;
            kv.insert(k.trim().to_string(), value);
        }
        let mut take = |key: &str| -> Result<f64> {
            kv.remove(key)
                .ok_or_else(|| Error::Config(format!("setting {} needs `{key}`", i + 1)))
        };
        let (threshold, ratio) = (take("threshold")?, take("ratio")?);
        let (attack_ms, release_s) = (take("attack")?, take("release")?);
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown setting key `{k}`")));
        }
        let oracle = OracleSettings {
            threshold_db: threshold,
            ratio,
            attack_ms,
            release_ms: release_s * 1000.0,
            makeup_db: makeup,
        };
        let out = synth_compressor(&source, &oracle, SAMPLE_RATE as f64)?;
        let out_name = format!("setting{:02}.wav", i + 1);
        save_wav(&cfg.out_dir.join(&out_name), &out, SAMPLE_RATE)?;
        entries.push(ManifestEntry {
            input: PathBuf::from(input_name),
            output: PathBuf::from(&out_name),
            raw: RawControls::Cl1b {
                threshold_dbu: threshold,
                ratio,
                attack_ms,
                release_s,
            },
        });
        cfg.log(format_args!("wrote {out_name}"));
    }
    if entries.is_empty() {
        return Err(Error::Config("settings grid is empty".into()));
    }
    write_manifest(&cfg.out_dir.join("manifest.tsv"), &entries)?;
    cfg.log(format_args!(
        "dataset: {} settings -> {}",
        entries.len(),
        cfg.out_dir.join("manifest.tsv").display()
    ));
    Ok(())
}
