//! Iterative radix-2 complex FFT with precomputed twiddles, plus the
//! magnitude-spectrum helper used by the conditioning features.

use crate::error::{Error, Result};
use crate::kernels::Tensor;

/// FFT plan for one power-of-two size. Reusable and immutable.
#[derive(Debug, Clone)]
pub struct Fft {
    size: usize,
    // twiddle[k] = e^{-2*pi*i*k/size} for k in 0..size/2
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
    bitrev: Vec<u32>,
}

impl Fft {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::Config(format!(
                "FFT size must be a power of two >= 2, got {size}"
            )));
        }
        let half = size / 2;
        let mut tw_re = Vec::with_capacity(half);
        let mut tw_im = Vec::with_capacity(half);
        for k in 0..half {
            let ang = -2.0 * std::f64::consts::PI * k as f64 / size as f64;
            tw_re.push(ang.cos());
            tw_im.push(ang.sin());
        }
        let bits = size.trailing_zeros();
        let bitrev = (0..size as u32)
            .map(|i| i.reverse_bits() >> (32 - bits))
            .collect();
        Ok(Fft {
            size,
            tw_re,
            tw_im,
            bitrev,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// In-place complex FFT over split re/im buffers of length `size`.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.size;
        assert_eq!(re.len(), n);
        assert_eq!(im.len(), n);
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            let mut base = 0;
            while base < n {
                for k in 0..half {
                    let (wr, wi) = (self.tw_re[k * stride], self.tw_im[k * stride]);
                    let (i0, i1) = (base + k, base + k + half);
                    let tr = wr * re[i1] - wi * im[i1];
                    let ti = wr * im[i1] + wi * re[i1];
                    re[i1] = re[i0] - tr;
                    im[i1] = im[i0] - ti;
                    re[i0] += tr;
                    im[i0] += ti;
                }
                base += len;
            }
            len *= 2;
        }
    }
}

/// Full complex spectrum of a real signal zero-padded to `fft_size`.
/// Returns split re/im of length `fft_size`.
pub fn rfft(x: &[f64], fft: &Fft) -> (Vec<f64>, Vec<f64>) {
    let n = fft.size();
    assert!(x.len() <= n, "input longer than FFT size");
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    re[..x.len()].copy_from_slice(x);
    fft.forward(&mut re, &mut im);
    (re, im)
}

/// |X_k| for k = 0..=fft_size/2 of the zero-padded input.
pub fn rfft_magnitude(x: &Tensor, fft_size: usize) -> Result<Tensor> {
    if !fft_size.is_power_of_two() || fft_size < x.len() {
        return Err(Error::Config(format!(
            "fft_size must be a power of two >= input length, got {fft_size} for input {}",
            x.len()
        )));
    }
    let fft = Fft::new(fft_size)?;
    Ok(Tensor::from_vec(rfft_magnitude_with(x.data(), &fft)))
}

/// Magnitude bins 0..=size/2 with a caller-provided plan (streaming hot path).
pub fn rfft_magnitude_with(x: &[f64], fft: &Fft) -> Vec<f64> {
    let mut out = vec![0.0; fft.size() / 2 + 1];
    let mut re = vec![0.0; fft.size()];
    let mut im = vec![0.0; fft.size()];
    rfft_magnitude_into(x, fft, &mut re, &mut im, &mut out);
    out
}

/// Allocation-free variant: `re`/`im` are scratch of length `fft.size()`,
/// `out` receives the size/2 + 1 magnitude bins.
pub fn rfft_magnitude_into(x: &[f64], fft: &Fft, re: &mut [f64], im: &mut [f64], out: &mut [f64]) {
    let n = fft.size();
    debug_assert!(x.len() <= n);
    debug_assert_eq!(re.len(), n);
    debug_assert_eq!(im.len(), n);
    debug_assert_eq!(out.len(), n / 2 + 1);
    re[..x.len()].copy_from_slice(x);
    re[x.len()..].iter_mut().for_each(|v| *v = 0.0);
    im.iter_mut().for_each(|v| *v = 0.0);
    fft.forward(re, im);
    for (k, o) in out.iter_mut().enumerate() {
        *o = (re[k] * re[k] + im[k] * im[k]).sqrt();
    }
}
