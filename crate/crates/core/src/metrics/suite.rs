//! Metric definitions and the per-recording report.

use crate::error::{Error, Result};
use crate::metrics::stft::Stft;
use std::fmt::Write as _;

/// SFE analysis window (75% overlap).
pub const SFE_WINDOW: usize = 2048;
/// M-STFTE resolutions (75% overlap each).
pub const MSTFT_WINDOWS: [usize; 3] = [512, 1024, 2048];

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::Shape(format!(
            "metric inputs must be equal-length and non-empty; got {} and {}",
            y.len(),
            yhat.len()
        )));
    }
    Ok(())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let n = y.len() as f64;
    Ok(y.iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let n = y.len() as f64;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
}

/// Error-to-signal ratio, sum (y - yhat)^2 / sum y^2, unweighted.
pub fn esr(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let sig: f64 = y.iter().map(|a| a * a).sum();
    if sig == 0.0 {
        return Err(Error::Numeric(
            "ESR undefined for a zero-energy target".into(),
        ));
    }
    let err: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(err / sig)
}

/// sqrt(|mean(|y|^2 - |yhat|^2)|): energy deviation between target and
/// prediction. The absolute value keeps the radical defined when the
/// prediction carries more energy than the target.
pub fn rmse_energy(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let n = y.len() as f64;
    let mean_gap: f64 = y
        .iter()
        .zip(yhat)
        .map(|(a, b)| a * a - b * b)
        .sum::<f64>()
        / n;
    Ok(mean_gap.abs().sqrt())
}

fn flux_frames(mags: &[Vec<f64>]) -> Vec<Vec<f64>> {
    mags.windows(2)
        .map(|pair| {
            pair[1]
                .iter()
                .zip(&pair[0])
                .map(|(cur, prev)| (cur - prev).abs())
                .collect()
        })
        .collect()
}

/// Spectral flux error: the flux of a signal is the elementwise magnitude
/// change between consecutive STFT frames; the error is the L1 difference
/// between target and prediction flux, averaged over flux frames so the
/// value does not grow with signal duration.
pub fn spectral_flux_error(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let stft = Stft::new(SFE_WINDOW)?;
    if stft.frame_count(y.len()) < 2 {
        return Err(Error::Shape(format!(
            "SFE needs at least two {SFE_WINDOW}-sample frames, signal has {} samples",
            y.len()
        )));
    }
    let fy = flux_frames(&stft.magnitudes(y));
    let fh = flux_frames(&stft.magnitudes(yhat));
    let mut acc = 0.0;
    for (a, b) in fy.iter().zip(&fh) {
        for (u, v) in a.iter().zip(b) {
            acc += (u - v).abs();
        }
    }
    Ok(acc / fy.len() as f64)
}

/// Multi-resolution STFT error: mean over the three resolutions of
/// L1(|S(y)| - |S(yhat)|) / L1(|S(y)|).
pub fn mstft_error(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let mut acc = 0.0;
    for &w in &MSTFT_WINDOWS {
        let stft = Stft::new(w)?;
        if stft.frame_count(y.len()) == 0 {
            return Err(Error::Shape(format!(
                "M-STFTE needs at least {w} samples, signal has {}",
                y.len()
            )));
        }
        let sy = stft.magnitudes(y);
        let sh = stft.magnitudes(yhat);
        let mut num = 0.0;
        let mut den = 0.0;
        for (fy, fh) in sy.iter().zip(&sh) {
            for (a, b) in fy.iter().zip(fh) {
                num += (a - b).abs();
                den += a.abs();
            }
        }
        if den == 0.0 {
            return Err(Error::Numeric(
                "M-STFTE undefined for a zero-magnitude target".into(),
            ));
        }
        acc += num / den;
    }
    Ok(acc / MSTFT_WINDOWS.len() as f64)
}

/// One row of the evaluation table, in column order
/// (MSE, MAE, ESR, RMSE, SFE, M-STFTE).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValues {
    pub mse: f64,
    pub mae: f64,
    pub esr: f64,
    pub rmse: f64,
    pub sfe: f64,
    pub mstfte: f64,
}

impl MetricValues {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(MetricValues {
            mse: mse(y, yhat)?,
            mae: mae(y, yhat)?,
            esr: esr(y, yhat)?,
            rmse: rmse_energy(y, yhat)?,
            sfe: spectral_flux_error(y, yhat)?,
            mstfte: mstft_error(y, yhat)?,
        })
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.mse, self.mae, self.esr, self.rmse, self.sfe, self.mstfte]
    }
}

/// Per-recording values plus their aggregate mean.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    rows: Vec<(String, MetricValues)>,
}

impl MetricsReport {
    pub fn new() -> Self {
        MetricsReport { rows: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, values: MetricValues) {
        self.rows.push((name.into(), values));
    }

    pub fn rows(&self) -> &[(String, MetricValues)] {
        &self.rows
    }

    pub fn aggregate(&self) -> Option<MetricValues> {
        if self.rows.is_empty() {
            return None;
        }
        let n = self.rows.len() as f64;
        let mut sums = [0.0; 6];
        for (_, v) in &self.rows {
            for (s, x) in sums.iter_mut().zip(v.as_array()) {
                *s += x;
            }
        }
        Some(MetricValues {
            mse: sums[0] / n,
            mae: sums[1] / n,
            esr: sums[2] / n,
            rmse: sums[3] / n,
            sfe: sums[4] / n,
            mstfte: sums[5] / n,
        })
    }

    /// Tab-separated table: recording, MSE, MAE, ESR, RMSE, SFE, M-STFTE.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "recording\tMSE\tMAE\tESR\tRMSE\tSFE\tM-STFTE");
        for (name, v) in &self.rows {
            let _ = writeln!(
                out,
                "{name}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
                v.mse, v.mae, v.esr, v.rmse, v.sfe, v.mstfte
            );
        }
        if let Some(a) = self.aggregate() {
            let _ = writeln!(
                out,
                "aggregate\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
                a.mse, a.mae, a.esr, a.rmse, a.sfe, a.mstfte
            );
        }
        out
    }
}

impl Default for MetricsReport {
    fn default() -> Self {
        Self::new()
    }
}
