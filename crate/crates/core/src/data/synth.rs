//! Synthetic ground truth: a classic feed-forward dynamic range compressor
//! (hard-knee static curve in dB, separate one-pole attack/release smoothing
//! of the linear gain) and a deterministic mixed test signal.

use crate::error::{Error, Result};
use crate::kernels::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Threshold relative to full scale, dB.
    pub threshold_db: f64,
    pub ratio: f64,
    pub attack_ms: f64,
    pub release_ms: f64,
    pub makeup_db: f64,
}

impl OracleSettings {
    pub fn validate(&self) -> Result<()> {
        if self.ratio < 1.0 {
            return Err(Error::Config(format!(
                "compressor ratio must be >= 1, got {}",
                self.ratio
            )));
        }
        if self.attack_ms <= 0.0 || self.release_ms <= 0.0 {
            return Err(Error::Config("attack and release times must be > 0".into()));
        }
        Ok(())
    }
}

/// Feed-forward compression of `x`. Per sample: instantaneous level in dB,
/// hard-knee target gain L_out - L_in with L_out = T + (L_in - T)/R above
/// threshold, then one-pole smoothing toward the target with the attack
/// coefficient while gain falls and the release coefficient while it rises.
pub fn synth_compressor(x: &[f64], s: &OracleSettings, sample_rate: f64) -> Result<Vec<f64>> {
    s.validate()?;
    let alpha_a = 1.0 - (-1.0 / (s.attack_ms * 1e-3 * sample_rate)).exp();
    let alpha_r = 1.0 - (-1.0 / (s.release_ms * 1e-3 * sample_rate)).exp();
    let makeup = 10f64.powf(s.makeup_db / 20.0);
    let slope = 1.0 - 1.0 / s.ratio;
    let mut gain = 1.0f64;
    let mut out = Vec::with_capacity(x.len());
    for &v in x {
        let level_db = 20.0 * v.abs().max(1e-8).log10();
        let over = level_db - s.threshold_db;
        let target = if over > 0.0 {
            10f64.powf(-slope * over / 20.0)
        } else {
            1.0
        };
        let alpha = if target < gain { alpha_a } else { alpha_r };
        gain += alpha * (target - gain);
        out.push(v * gain * makeup);
    }
    Ok(out)
}

/// Deterministic mixed program material: noise bursts, tones, swept sines,
/// transients and amplitude ramps separated by brief silences, peaking
/// between -20 and -2 dBFS so mild compression thresholds engage.
pub fn test_signal(seconds: f64, sample_rate: f64, seed: u64) -> Vec<f64> {
    let total = (seconds * sample_rate) as usize;
    let mut rng = Rng::new(seed);
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        let kind = rng.next_u64() % 5;
        let seg_len = ((0.25 + 0.55 * rng.uniform()) * sample_rate) as usize;
        let amp = 10f64.powf(rng.range(-20.0, -2.0) / 20.0);
        match kind {
            0 => {
                // noise burst with decaying envelope
                let tau = 0.1 + 0.3 * rng.uniform();
                for i in 0..seg_len {
                    let env = (-(i as f64) / (tau * sample_rate)).exp();
                    out.push(amp * env * rng.normal() * 0.5);
                }
            }
            1 => {
                // steady tone
                let freq = rng.range(60.0, 4000.0);
                let w = 2.0 * std::f64::consts::PI * freq / sample_rate;
                for i in 0..seg_len {
                    out.push(amp * (w * i as f64).sin());
                }
            }
            2 => {
                // swept sine
                let f0 = rng.range(40.0, 400.0);
                let f1 = rng.range(800.0, 8000.0);
                let mut phase = 0.0;
                for i in 0..seg_len {
                    let t = i as f64 / seg_len as f64;
                    let f = f0 * (f1 / f0).powf(t);
                    phase += 2.0 * std::f64::consts::PI * f / sample_rate;
                    out.push(amp * phase.sin());
                }
            }
            3 => {
                // transient hits: sharp attacks with exponential decay
                let hits = 2 + (rng.next_u64() % 4) as usize;
                let spacing = seg_len / hits;
                let mut seg = vec![0.0; seg_len];
                for h in 0..hits {
                    let at = h * spacing;
                    let freq = rng.range(80.0, 1200.0);
                    let w = 2.0 * std::f64::consts::PI * freq / sample_rate;
                    for i in at..seg_len.min(at + spacing) {
                        let k = (i - at) as f64;
                        let env = (-k / (0.02 * sample_rate)).exp();
                        seg[i] += amp * env * (w * k).sin();
                    }
                }
                out.extend_from_slice(&seg);
            }
            _ => {
                // amplitude ramp over noise
                for i in 0..seg_len {
                    let env = i as f64 / seg_len as f64;
                    out.push(amp * env * rng.normal() * 0.4);
                }
            }
        }
        // short silence gap so split points can find quiet regions
        let gap = ((0.08 + 0.1 * rng.uniform()) * sample_rate) as usize;
        out.extend(std::iter::repeat(0.0).take(gap));
    }
    out.truncate(total);
    // keep strictly inside full scale
    for v in out.iter_mut() {
        *v = v.clamp(-0.99, 0.99);
    }
    out
}
