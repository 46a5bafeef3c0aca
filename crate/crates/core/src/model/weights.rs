//! Named, versioned parameter storage and its text file format.
//!
//! All parameters of one model live in a single flat `f64` buffer; each named
//! tensor is a span of it. Layers hold [`ParamId`] handles, the optimizer
//! walks the flat buffer, and the tape accumulates gradients at matching
//! offsets. Files are a structured-text document: a header echoing the
//! configuration, then each tensor with its shape and full-precision decimal
//! values, so round-trips are bit-exact and diffs are readable.

use crate::error::{Error, Result};
use crate::model::{Arch, Device, ModelConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const WEIGHT_FORMAT_VERSION: u32 = 1;

/// Handle to one named tensor inside a [`WeightStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
pub struct WeightStore {
    config: ModelConfig,
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    index: BTreeMap<String, usize>,
    data: Vec<f64>,
    /// Sealed stores (loaded from files) refuse to grow: declaring an absent
    /// tensor is then a missing-tensor error instead of a fresh allocation.
    sealed: bool,
    touched: Vec<bool>,
}

impl WeightStore {
    pub fn new(config: ModelConfig) -> Self {
        WeightStore {
            config,
            names: Vec::new(),
            shapes: Vec::new(),
            offsets: Vec::new(),
            index: BTreeMap::new(),
            data: Vec::new(),
            sealed: false,
            touched: Vec::new(),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Ensures `name` exists with `shape`. On unsealed stores an absent
    /// tensor is created (zero-filled); on sealed stores it is an error.
    pub fn declare(&mut self, name: &str, shape: &[usize]) -> Result<ParamId> {
        if let Some(&i) = self.index.get(name) {
            if self.shapes[i] != shape {
                return Err(Error::TensorShape {
                    name: name.to_string(),
                    expected: shape.to_vec(),
                    got: self.shapes[i].clone(),
                });
            }
            self.touched[i] = true;
            return Ok(ParamId(i));
        }
        if self.sealed {
            return Err(Error::MissingTensor(name.to_string()));
        }
        let len: usize = shape.iter().product();
        let i = self.names.len();
        self.names.push(name.to_string());
        self.shapes.push(shape.to_vec());
        self.offsets.push(self.data.len());
        self.index.insert(name.to_string(), i);
        self.data.resize(self.data.len() + len, 0.0);
        self.touched.push(true);
        Ok(ParamId(i))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.shapes[id.0]
    }

    /// (offset, length) of this tensor inside the flat buffer.
    pub fn span(&self, id: ParamId) -> (usize, usize) {
        let len: usize = self.shapes[id.0].iter().product();
        (self.offsets[id.0], len)
    }

    pub fn values(&self, id: ParamId) -> &[f64] {
        let (off, len) = self.span(id);
        &self.data[off..off + len]
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut [f64] {
        let (off, len) = self.span(id);
        &mut self.data[off..off + len]
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn tensor_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub(crate) fn seal(&mut self) {
        self.sealed = true;
    }

    /// Starts an exhaustiveness check: subsequent `declare` calls mark
    /// tensors, `finish_validation` reports any left unmarked.
    pub(crate) fn begin_validation(&mut self) {
        for t in self.touched.iter_mut() {
            *t = false;
        }
    }

    pub(crate) fn finish_validation(&self) -> Result<()> {
        for (i, t) in self.touched.iter().enumerate() {
            if !t {
                return Err(Error::Data(format!(
                    "weight file contains tensor `{}` not used by the {}/{} configuration",
                    self.names[i], self.config.arch, self.config.device
                )));
            }
        }
        Ok(())
    }

    /// Renders the full text representation (header + tensors).
    pub fn render(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "optossm-weights v{WEIGHT_FORMAT_VERSION}");
        let _ = writeln!(out, "arch {}", cfg.arch);
        let _ = writeln!(out, "device {}", cfg.device);
        let _ = writeln!(out, "d_model {}", cfg.d_model);
        let _ = writeln!(out, "d_inner {}", cfg.d_inner);
        let _ = writeln!(out, "ssm_state {}", cfg.ssm_state);
        let _ = writeln!(out, "conv_kernel {}", cfg.conv_kernel);
        let _ = writeln!(out, "fft_size {}", cfg.fft_size);
        let _ = writeln!(out, "buffer_len {}", cfg.buffer_len);
        let _ = writeln!(out, "gru_hidden {}", cfg.gru_hidden);
        let _ = writeln!(out, "lstm_hidden {}", cfg.lstm_hidden);
        let _ = writeln!(out, "ed_hidden {}", cfg.ed_hidden);
        let _ = writeln!(out, "ed_encoder_kernel {}", cfg.ed_encoder_kernel);
        let _ = writeln!(out, "seed {}", cfg.seed);
        let _ = writeln!(out, "tensors {}", self.names.len());
        for i in 0..self.names.len() {
            let _ = write!(out, "tensor {}", self.names[i]);
            for d in &self.shapes[i] {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
            let len: usize = self.shapes[i].iter().product();
            let vals = &self.data[self.offsets[i]..self.offsets[i] + len];
            for (j, v) in vals.iter().enumerate() {
                if j > 0 {
                    out.push(if j % 8 == 0 { '\n' } else { ' ' });
                }
                // f64 Display prints the shortest decimal that parses back
                // to the same bits
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<WeightStore> {
        let mut lines = text.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Data("empty weight file".into()))?;
        let version: u32 = head
            .strip_prefix("optossm-weights v")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad weight file header `{head}`")))?;
        if version != WEIGHT_FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                supported: WEIGHT_FORMAT_VERSION,
            });
        }

        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        let mut tensor_count = None;
        for line in lines.by_ref() {
            let mut it = line.splitn(2, ' ');
            let key = it.next().unwrap_or("");
            let val = it.next().unwrap_or("").trim();
            if key == "tensors" {
                tensor_count = Some(val.parse::<usize>().map_err(|_| {
                    Error::Data(format!("bad tensor count `{val}` in weight file"))
                })?);
                break;
            }
            fields.insert(key.to_string(), val.to_string());
        }
        let tensor_count =
            tensor_count.ok_or_else(|| Error::Data("weight file missing `tensors` line".into()))?;

        let get = |k: &str| -> Result<&String> {
            fields
                .get(k)
                .ok_or_else(|| Error::Data(format!("weight file missing header field `{k}`")))
        };
        let dim = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Data(format!("bad value for header field `{k}`")))
        };
        let config = ModelConfig {
            arch: Arch::parse(get("arch")?)?,
            device: Device::parse(get("device")?)?,
            d_model: dim("d_model")?,
            d_inner: dim("d_inner")?,
            ssm_state: dim("ssm_state")?,
            conv_kernel: dim("conv_kernel")?,
            fft_size: dim("fft_size")?,
            buffer_len: dim("buffer_len")?,
            gru_hidden: dim("gru_hidden")?,
            lstm_hidden: dim("lstm_hidden")?,
            ed_hidden: dim("ed_hidden")?,
            ed_encoder_kernel: dim("ed_encoder_kernel")?,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Data("bad seed in weight file".into()))?,
        };
        config.validate()?;

        // The `tensor` header line carries the name and all dims; value lines
        // follow until prod(dims) values have been read.
        let mut store = WeightStore::new(config);
        for _ in 0..tensor_count {
            let header = lines
                .next()
                .ok_or_else(|| Error::Data("truncated weight file".into()))?;
            let mut parts = header.split_whitespace();
            if parts.next() != Some("tensor") {
                return Err(Error::Data(format!(
                    "expected `tensor` record, found `{header}`"
                )));
            }
            let name = parts
                .next()
                .ok_or_else(|| Error::Data("tensor record missing name".into()))?
                .to_string();
            let shape: Vec<usize> = parts
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Data(format!("bad dim `{t}` in tensor `{name}`")))
                })
                .collect::<Result<_>>()?;
            if shape.is_empty() {
                return Err(Error::Data(format!("tensor `{name}` has no shape")));
            }
            let len: usize = shape.iter().product();
            let mut vals = Vec::with_capacity(len);
            while vals.len() < len {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Data(format!("tensor `{name}` truncated")))?;
                for t in line.split_whitespace() {
                    vals.push(t.parse::<f64>().map_err(|_| {
                        Error::Data(format!("bad value `{t}` in tensor `{name}`"))
                    })?);
                }
            }
            if vals.len() != len {
                return Err(Error::Data(format!(
                    "tensor `{name}` has {} values, expected {len}",
                    vals.len()
                )));
            }
            let id = store.declare(&name, &shape)?;
            store.values_mut(id).copy_from_slice(&vals);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Data("trailing data after last tensor".into()));
        }
        store.seal();
        Ok(store)
    }
}

/// Writes the store to a file; bytes are deterministic.
pub fn save_weights(store: &WeightStore, path: &Path) -> Result<()> {
    std::fs::write(path, store.render())?;
    Ok(())
}

/// Reads a weight file and validates it against its own configuration echo:
/// every tensor the architecture needs must be present with the right shape,
/// and nothing extra may be present.
pub fn load_weights(path: &Path) -> Result<WeightStore> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read weight file {}: {e}", path.display())))?;
    let mut store = WeightStore::parse(&text)?;
    store.begin_validation();
    crate::model::Model::attach(&mut store)?;
    store.finish_validation()?;
    Ok(store)
}

/// Builds an unsealed store with the given named tensors; unit-test helper.
#[cfg(test)]
pub(crate) fn test_store(entries: &[(&str, Vec<usize>, Vec<f64>)]) -> WeightStore {
    let mut store = WeightStore::new(ModelConfig::new(Arch::S6, Device::Cl1b));
    for (name, shape, vals) in entries {
        let id = store.declare(name, shape).unwrap();
        store.values_mut(id).copy_from_slice(vals);
    }
    store
}
