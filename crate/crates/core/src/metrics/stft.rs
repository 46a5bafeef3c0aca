//! Short-time Fourier magnitude frames: periodic Hann window, hop of a
//! quarter window (75% overlap), no zero padding or centering.

use crate::error::{Error, Result};
use crate::kernels::Fft;

#[derive(Debug, Clone)]
pub struct Stft {
    window: Vec<f64>,
    hop: usize,
    fft: Fft,
}

impl Stft {
    pub fn new(window_len: usize) -> Result<Self> {
        if !window_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "STFT window must be a power of two, got {window_len}"
            )));
        }
        let window = (0..window_len)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / window_len as f64).cos())
            .collect();
        Ok(Stft {
            window,
            hop: window_len / 4,
            fft: Fft::new(window_len)?,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        if signal_len < self.window.len() {
            0
        } else {
            (signal_len - self.window.len()) / self.hop + 1
        }
    }

    /// One-sided magnitude frames, frame t covering samples
    /// [t*hop, t*hop + window).
    pub fn magnitudes(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let w = self.window.len();
        let bins = w / 2 + 1;
        let frames = self.frame_count(x.len());
        let mut re = vec![0.0; w];
        let mut im = vec![0.0; w];
        let mut out = Vec::with_capacity(frames);
        for t in 0..frames {
            let seg = &x[t * self.hop..t * self.hop + w];
            for i in 0..w {
                re[i] = seg[i] * self.window[i];
                im[i] = 0.0;
            }
            self.fft.forward(&mut re, &mut im);
            let mut mags = Vec::with_capacity(bins);
            for k in 0..bins {
                mags.push((re[k] * re[k] + im[k] * im[k]).sqrt());
            }
            out.push(mags);
        }
        out
    }
}

/// Convenience wrapper building a plan per call.
pub fn stft_magnitudes(x: &[f64], window_len: usize) -> Result<Vec<Vec<f64>>> {
    Ok(Stft::new(window_len)?.magnitudes(x))
}
