//! Model configuration: architecture/device tags and the canonical
//! dimensions shared by every variant.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    S6,
    S4d,
    Ed,
    Lstm,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::S6, Arch::S4d, Arch::Ed, Arch::Lstm];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "s6" => Ok(Arch::S6),
            "s4d" => Ok(Arch::S4d),
            "ed" => Ok(Arch::Ed),
            "lstm" => Ok(Arch::Lstm),
            other => Err(Error::Config(format!(
                "unknown architecture `{other}` (expected s6|s4d|ed|lstm)"
            ))),
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::S6 => "s6",
            Arch::S4d => "s4d",
            Arch::Ed => "ed",
            Arch::Lstm => "lstm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Device {
    La2a,
    Cl1b,
}

impl Device {
    pub const ALL: [Device; 2] = [Device::La2a, Device::Cl1b];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "la2a" => Ok(Device::La2a),
            "cl1b" => Ok(Device::Cl1b),
            other => Err(Error::Config(format!(
                "unknown device `{other}` (expected la2a|cl1b)"
            ))),
        }
    }

    /// Width of the compression-amount control vector p_co.
    pub fn co_dim(self) -> usize {
        2
    }

    /// Width of the timing control vector p_ti (empty for the LA-2A, whose
    /// attack and release are not user controls).
    pub fn ti_dim(self) -> usize {
        match self {
            Device::La2a => 0,
            Device::Cl1b => 2,
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Device::La2a => "la2a",
            Device::Cl1b => "cl1b",
        })
    }
}

/// Full model configuration. `new` gives the canonical dimensions; the
/// buffer length and FFT size are fixed by the streaming contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub device: Device,
    pub d_model: usize,
    pub d_inner: usize,
    /// State size N per channel of the SSM layers.
    pub ssm_state: usize,
    /// Depthwise causal conv length inside the S6 block.
    pub conv_kernel: usize,
    pub fft_size: usize,
    pub buffer_len: usize,
    /// Conditioning GRU hidden size (split into the c and d vectors).
    pub gru_hidden: usize,
    /// Hidden size of the LSTM-block variant.
    pub lstm_hidden: usize,
    /// Hidden size of each LSTM inside the ED-block variant.
    pub ed_hidden: usize,
    /// Input-history length of the ED encoder conv.
    pub ed_encoder_kernel: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(arch: Arch, device: Device) -> Self {
        ModelConfig {
            arch,
            device,
            d_model: 2,
            d_inner: 3,
            ssm_state: 4,
            conv_kernel: 4,
            fft_size: 128,
            buffer_len: 64,
            gru_hidden: 4,
            lstm_hidden: 7,
            ed_hidden: 4,
            ed_encoder_kernel: 4,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of magnitude bins the conditioning features see.
    pub fn spectrum_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Spectrum conv kernel length: one more than the FFT size.
    pub fn spectrum_kernel(&self) -> usize {
        self.fft_size + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.buffer_len != 64 {
            return Err(Error::Config(format!(
                "buffer length is fixed at 64, got {}",
                self.buffer_len
            )));
        }
        if self.fft_size != 128 {
            return Err(Error::Config(format!(
                "FFT size is fixed at 128, got {}",
                self.fft_size
            )));
        }
        let dims = [
            self.d_model,
            self.d_inner,
            self.ssm_state,
            self.conv_kernel,
            self.gru_hidden,
            self.lstm_hidden,
            self.ed_hidden,
            self.ed_encoder_kernel,
        ];
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("all dimensions must be positive".into()));
        }
        if self.gru_hidden % 2 != 0 {
            return Err(Error::Config(
                "gru_hidden must be even (it splits into the c and d vectors)".into(),
            ));
        }
        if self.gru_hidden / 2 != self.d_model {
            return Err(Error::Config(
                "gru_hidden must be twice d_model so c and d match the modulated vector".into(),
            ));
        }
        Ok(())
    }

    /// Algorithmic latency of the streaming model, in samples: the length of
    /// the input window each output sample depends on.
    pub fn latency_samples(&self) -> usize {
        self.buffer_len
    }

    pub fn latency_ms(&self, sample_rate: f64) -> f64 {
        self.buffer_len as f64 / sample_rate * 1000.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_config_is_valid() {
        for arch in Arch::ALL {
            for device in Device::ALL {
                ModelConfig::new(arch, device).validate().unwrap();
            }
        }
    }

    #[test]
    fn latency_is_sixty_four_samples() {
        let cfg = ModelConfig::new(Arch::S6, Device::Cl1b);
        assert_eq!(cfg.latency_samples(), 64);
        assert!((cfg.latency_ms(48_000.0) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tag_round_trips() {
        for arch in Arch::ALL {
            assert_eq!(Arch::parse(&arch.to_string()).unwrap(), arch);
        }
        for device in Device::ALL {
            assert_eq!(Device::parse(&device.to_string()).unwrap(), device);
        }
        assert!(Arch::parse("tcn").is_err());
        assert!(Device::parse("1176").is_err());
    }

    #[test]
    fn invalid_dims_rejected() {
        let mut cfg = ModelConfig::new(Arch::S6, Device::Cl1b);
        cfg.buffer_len = 32;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::new(Arch::S6, Device::Cl1b);
        cfg.d_inner = 0;
        assert!(cfg.validate().is_err());
    }
}
