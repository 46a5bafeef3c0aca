//! Dataset manifest: one line per recording listing the input/output WAV
//! paths, the device, and the raw control values.
//!
//! Line format (tab separated):
//!   input.wav<TAB>output.wav<TAB>cl1b<TAB>threshold=-10<TAB>ratio=6<TAB>attack=0.5<TAB>release=5
//!   input.wav<TAB>output.wav<TAB>la2a<TAB>peak_reduction=40<TAB>switch=1
//! Paths are relative to the manifest's directory. Lines starting with '#'
//! are comments.

use crate::data::{load_wav, RawControls, Recording};
use crate::error::{Error, Result};
use crate::model::Device;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub input: PathBuf,
    pub output: PathBuf,
    pub raw: RawControls,
}

fn parse_kv(parts: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("bad control field `{p}` in manifest")))?;
        let val: f64 = v
            .parse()
            .map_err(|_| Error::Data(format!("bad control value `{v}` for `{k}`")))?;
        map.insert(k.to_string(), val);
    }
    Ok(map)
}

fn take(map: &mut BTreeMap<String, f64>, key: &str) -> Result<f64> {
    map.remove(key)
        .ok_or_else(|| Error::Data(format!("manifest entry missing control `{key}`")))
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() < 3 {
            return Err(Error::Data(format!(
                "manifest line {} needs input, output and device fields",
                lineno + 1
            )));
        }
        let device = Device::parse(parts[2])?;
        let mut kv = parse_kv(&parts[3..])?;
        let raw = match device {
            Device::La2a => RawControls::La2a {
                peak_reduction: take(&mut kv, "peak_reduction")?,
                limit_switch: take(&mut kv, "switch")?,
            },
            Device::Cl1b => RawControls::Cl1b {
                threshold_dbu: take(&mut kv, "threshold")?,
                ratio: take(&mut kv, "ratio")?,
                attack_ms: take(&mut kv, "attack")?,
                release_s: take(&mut kv, "release")?,
            },
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::Data(format!(
                "manifest line {}: unknown control `{k}`",
                lineno + 1
            )));
        }
        entries.push(ManifestEntry {
            input: PathBuf::from(parts[0]),
            output: PathBuf::from(parts[1]),
            raw,
        });
    }
    Ok(entries)
}

pub fn render_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = write!(out, "{}\t{}", e.input.display(), e.output.display());
        match e.raw {
            RawControls::La2a {
                peak_reduction,
                limit_switch,
            } => {
                let _ = writeln!(out, "\tla2a\tpeak_reduction={peak_reduction}\tswitch={limit_switch}");
            }
            RawControls::Cl1b {
                threshold_dbu,
                ratio,
                attack_ms,
                release_s,
            } => {
                let _ = writeln!(
                    out,
                    "\tcl1b\tthreshold={threshold_dbu}\tratio={ratio}\tattack={attack_ms}\trelease={release_s}"
                );
            }
        }
    }
    out
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    std::fs::write(path, render_manifest(entries))
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Reads a manifest and loads every referenced WAV pair.
pub fn load_manifest(path: &Path) -> Result<Vec<Recording>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read manifest {}: {e}", path.display())))?;
    let entries = parse_manifest(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut recordings = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let input = load_wav(&base.join(&e.input))?;
        let output = load_wav(&base.join(&e.output))?;
        if input.sample_rate != output.sample_rate {
            return Err(Error::Data(format!(
                "entry {}: sample rates differ ({} vs {})",
                i + 1,
                input.sample_rate,
                output.sample_rate
            )));
        }
        let name = e
            .output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("entry{}", i + 1));
        recordings.push(Recording::new(
            name,
            input.samples,
            output.samples,
            input.sample_rate,
            e.raw,
        )?);
    }
    Ok(recordings)
}
