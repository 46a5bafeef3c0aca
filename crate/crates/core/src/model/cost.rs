//! Parameter and FLOP accounting from per-layer closed forms.
//!
//! Conventions: a multiply and an add each count as one FLOP; every
//! activation evaluation (sigmoid, tanh, softsign, swish, GELU, softplus,
//! exp, cos, sin) is estimated at 10 FLOPs per element. Input-independent
//! quantities (the S4D discretization, the S6 state matrix A) are cached at
//! stream setup and excluded from the per-sample totals, as is the input
//! FFT, which is reported as a separate line.

use crate::model::{Arch, Device, ModelConfig, WeightStore};

/// dense in -> out: params in*out + out.
pub fn dense_params(input: usize, out: usize) -> usize {
    input * out + out
}

/// dense FLOPs: 2*in*out (multiply-adds) + out (bias) + 10*out if activated.
pub fn dense_flops(input: usize, out: usize, activated: bool) -> usize {
    2 * input * out + out + if activated { 10 * out } else { 0 }
}

/// depthwise causal conv: params ch*k + ch.
pub fn conv_params(ch: usize, k: usize) -> usize {
    ch * k + ch
}

/// depthwise causal conv FLOPs per step: per channel k multiplies, k-1
/// adds, one bias add = 2k.
pub fn conv_flops(ch: usize, k: usize) -> usize {
    2 * ch * k
}

/// LSTM: params 4(h(in+h) + h).
pub fn lstm_params(input: usize, h: usize) -> usize {
    4 * (h * (input + h) + h)
}

/// LSTM FLOPs per step: 8h(in+h) matvecs + 4h bias + 4h gate-sum adds +
/// 50h activations (3 sigmoid + 2 tanh) + 4h cell/hidden elementwise.
pub fn lstm_flops(input: usize, h: usize) -> usize {
    8 * h * (input + h) + 4 * h + 4 * h + 50 * h + 4 * h
}

/// GRU: params 3(h(in+h) + h).
pub fn gru_params(input: usize, h: usize) -> usize {
    3 * (h * (input + h) + h)
}

/// GRU FLOPs per step: 6h(in+h) matvecs + 3h bias + 3h gate-sum adds +
/// 30h activations (2 sigmoid + 1 tanh) + 5h elementwise (r(.)h, 1-z,
/// (1-z)(.)h, z(.)n, final add).
pub fn gru_flops(input: usize, h: usize) -> usize {
    6 * h * (input + h) + 3 * h + 3 * h + 30 * h + 5 * h
}

/// S6 layer: params a_log (ch*n) + D (ch) + B/C selection (n*ch + n each) +
/// dt selection (ch*ch + ch).
pub fn s6_params(ch: usize, n: usize) -> usize {
    ch * n + ch + 2 * (n * ch + n) + ch * ch + ch
}

/// S6 FLOPs per step: B and C selections 2(2*n*ch + n), dt selection
/// 2*ch*ch + ch + 10*ch softplus, abar ch*n multiply + 10*ch*n exp,
/// bbar ch*n, state update 3*ch*n, output 2*n*ch + 2*ch (A is cached).
pub fn s6_flops(ch: usize, n: usize) -> usize {
    2 * (2 * n * ch + n) + (2 * ch * ch + ch + 10 * ch) + (ch * n + 10 * ch * n) + ch * n
        + 3 * ch * n
        + (2 * n * ch + 2 * ch)
}

/// S4D layer: params lambda (2n) + log_dt (ch) + B (2n) + C (2*ch*n) + D (ch).
pub fn s4d_params(ch: usize, n: usize) -> usize {
    2 * n + ch + 2 * n + 2 * ch * n + ch
}

/// S4D FLOPs per step with cached discretization: complex state update
/// 10*ch*n, output Re(<C,h>) 4*ch*n, feedthrough 2*ch.
pub fn s4d_flops(ch: usize, n: usize) -> usize {
    10 * ch * n + 4 * ch * n + 2 * ch
}

/// swish/gelu/softsign gate applied to a vector: 10 per element.
pub fn act_flops(len: usize) -> usize {
    10 * len
}

/// Informational estimate of the per-sample input FFT cost (radix-2
/// butterflies at ~10 FLOPs each plus magnitude extraction). Not part of
/// the model totals.
pub fn fft_flops_estimate(fft_size: usize) -> usize {
    let butterflies = (fft_size / 2) * fft_size.trailing_zeros() as usize;
    10 * butterflies + 13 * (fft_size / 2 + 1)
}

#[derive(Debug, Clone)]
pub struct CostLine {
    pub name: String,
    pub params: usize,
    pub flops: usize,
}

#[derive(Debug, Clone)]
pub struct CostReport {
    pub arch: Arch,
    pub device: Device,
    pub lines: Vec<CostLine>,
    pub total_params: usize,
    pub total_flops: usize,
    /// Published totals this design was budgeted against (FLOPs, params).
    pub reference: (usize, usize),
    pub fft_flops: usize,
    pub latency_samples: usize,
    pub latency_ms: f64,
}

/// Published per-sample FLOP figure for the conditioning block alone
/// (comparison only; the bookkeeping behind it is not reconstructable).
pub fn conditioning_reference_flops(device: Device) -> usize {
    match device {
        Device::Cl1b => 352,
        Device::La2a => 400,
    }
}

/// Design-budget totals per (arch, device): (FLOPs/sample, parameters).
pub fn reference_costs(arch: Arch, device: Device) -> (usize, usize) {
    match (arch, device) {
        (Arch::S6, Device::La2a) => (1242, 984),
        (Arch::S6, Device::Cl1b) => (1290, 1000),
        (Arch::S4d, Device::La2a) => (1220, 1027),
        (Arch::S4d, Device::Cl1b) => (1268, 1043),
        (Arch::Ed, Device::La2a) => (1252, 1009),
        (Arch::Ed, Device::Cl1b) => (1300, 1025),
        (Arch::Lstm, Device::La2a) => (1668, 989),
        (Arch::Lstm, Device::Cl1b) => (1716, 1005),
    }
}

fn block_cost(cfg: &ModelConfig, pre_conditioning: bool) -> (usize, usize) {
    let d = cfg.d_model;
    match cfg.arch {
        Arch::S6 => {
            let di = cfg.d_inner;
            let params = dense_params(d, 2 * di)
                + conv_params(di, cfg.conv_kernel)
                + 1 // swish beta, conv path
                + s6_params(di, cfg.ssm_state)
                + 1 // swish beta, residual path
                + dense_params(di, d);
            let flops = dense_flops(d, 2 * di, false)
                + conv_flops(di, cfg.conv_kernel)
                + act_flops(di)
                + s6_flops(di, cfg.ssm_state)
                + act_flops(di)
                + di // gating multiply
                + dense_flops(di, d, true);
            (params, flops)
        }
        Arch::S4d => {
            let di = cfg.d_inner;
            let params =
                dense_params(d, di) + s4d_params(di, cfg.ssm_state) + dense_params(di, d);
            let flops = dense_flops(d, di, false)
                + s4d_flops(di, cfg.ssm_state)
                + dense_flops(di, d, true);
            (params, flops)
        }
        Arch::Ed => {
            let h = cfg.ed_hidden;
            let k = cfg.ed_encoder_kernel;
            let enc = if pre_conditioning {
                (dense_params(k * d, 2 * h), dense_flops(k * d, 2 * h, false))
            } else {
                (0, 0)
            };
            let params = enc.0 + lstm_params(d, h) + lstm_params(h, h) + dense_params(h, d);
            let flops = enc.1 + lstm_flops(d, h) + lstm_flops(h, h) + dense_flops(h, d, true);
            (params, flops)
        }
        Arch::Lstm => {
            let h = cfg.lstm_hidden;
            (
                lstm_params(d, h) + dense_params(h, d),
                lstm_flops(d, h) + dense_flops(h, d, true),
            )
        }
    }
}

fn conditioning_cost(cfg: &ModelConfig) -> (usize, usize) {
    let d = cfg.d_model;
    let co = cfg.device.co_dim();
    let ti = cfg.device.ti_dim();
    let kernel = cfg.spectrum_kernel();
    let params = dense_params(kernel, d)      // spectrum conv as a dense over the padded bins
        + dense_params(co + d, 2 * d)         // FiLM
        + dense_params(d, 2 * d)              // GLU-1
        + gru_params(ti + d, cfg.gru_hidden)  // TFiLM
        + dense_params(d, 2 * d); // GLU-2
    let glu = dense_flops(d, 2 * d, false) + act_flops(d) + d;
    let flops = dense_flops(kernel, d, false)
        + dense_flops(co + d, 2 * d, false)
        + 2 * d // FiLM apply a(.)g + b
        + glu
        + gru_flops(ti + d, cfg.gru_hidden)
        + 2 * d // TFiLM apply
        + glu;
    (params, flops)
}

/// Exact per-component cost table for a configuration.
pub fn count_flops(cfg: &ModelConfig) -> CostReport {
    let d = cfg.d_model;
    let mut lines = Vec::new();
    lines.push(CostLine {
        name: "fc_in".into(),
        params: dense_params(cfg.buffer_len, d),
        flops: dense_flops(cfg.buffer_len, d, false),
    });
    let (p1, f1) = block_cost(cfg, true);
    lines.push(CostLine {
        name: format!("block1 ({})", cfg.arch),
        params: p1,
        flops: f1,
    });
    let (pc, fc) = conditioning_cost(cfg);
    lines.push(CostLine {
        name: "conditioning".into(),
        params: pc,
        flops: fc,
    });
    let (p2, f2) = block_cost(cfg, false);
    lines.push(CostLine {
        name: format!("block2 ({})", cfg.arch),
        params: p2,
        flops: f2,
    });
    lines.push(CostLine {
        name: "fc_out".into(),
        params: dense_params(d, 1),
        // + 1 for the final y = g * x multiply
        flops: dense_flops(d, 1, false) + 1,
    });
    let total_params = lines.iter().map(|l| l.params).sum();
    let total_flops = lines.iter().map(|l| l.flops).sum();
    CostReport {
        arch: cfg.arch,
        device: cfg.device,
        lines,
        total_params,
        total_flops,
        reference: reference_costs(cfg.arch, cfg.device),
        fft_flops: fft_flops_estimate(cfg.fft_size),
        latency_samples: cfg.latency_samples(),
        latency_ms: cfg.latency_ms(48_000.0),
    }
}

/// Number of trainable scalars actually held by a store.
pub fn count_params(store: &WeightStore) -> usize {
    store.len()
}

impl CostReport {
    /// Plain-text table with the design budget side by side.
    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "architecture {} / device {}", self.arch, self.device);
        let _ = writeln!(out, "{:<22} {:>10} {:>14}", "component", "params", "flops/sample");
        for l in &self.lines {
            let _ = writeln!(out, "{:<22} {:>10} {:>14}", l.name, l.params, l.flops);
        }
        let _ = writeln!(
            out,
            "{:<22} {:>10} {:>14}",
            "total", self.total_params, self.total_flops
        );
        let _ = writeln!(
            out,
            "{:<22} {:>10} {:>14}",
            "reference budget", self.reference.1, self.reference.0
        );
        let _ = writeln!(
            out,
            "conditioning reference figure: {} flops/sample",
            conditioning_reference_flops(self.device)
        );
        let _ = writeln!(
            out,
            "input FFT (reported separately, excluded from total): {} flops/sample",
            self.fft_flops
        );
        let _ = writeln!(
            out,
            "latency: {} samples ({:.3} ms at 48 kHz)",
            self.latency_samples, self.latency_ms
        );
        out
    }
}
