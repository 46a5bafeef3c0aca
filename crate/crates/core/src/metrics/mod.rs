//! Evaluation suite: MSE, MAE, ESR, energy RMSE, spectral flux error, and
//! multi-resolution STFT error, plus the report table they land in.

mod stft;
mod suite;

pub use stft::{stft_magnitudes, Stft};
pub use suite::{
    mae, mse, esr, mstft_error, rmse_energy, spectral_flux_error, MetricValues, MetricsReport,
    MSTFT_WINDOWS, SFE_WINDOW,
};
