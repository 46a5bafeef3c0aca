//! Streaming neural emulation of optical dynamic range compressors.
//!
//! The library builds small conditioned sequence models (selective state
//! space, diagonal state space, encoder-decoder, LSTM) that run as
//! single-sample streaming audio effects: every inference step consumes the
//! 64 most recent input samples plus the device's control parameters and
//! emits one gain coefficient `g`, so the output sample is `y_n = g * x_n`.
//!
//! Modules:
//! - [`kernels`]: dense arrays, real FFT, activations, seeded RNG
//! - [`layers`]: dense / causal conv / LSTM / GRU / S4D / S6 primitive layers
//! - [`blocks`]: the recurrent block variants and the FiLM/GLU/TFiLM
//!   conditioning block
//! - [`model`]: end-to-end assembly, weight files, streaming state, cost
//!   accounting
//! - [`tape`]: reverse-mode autodiff over a recorded op tape
//! - [`train`]: Adam + gradient clipping + LR schedule + stateful TBPTT loop
//! - [`metrics`]: MSE / MAE / ESR / energy-RMSE / SFE / M-STFTE
//! - [`data`]: WAV I/O, control normalization, splits, batch assembly, and a
//!   synthetic feed-forward compressor for generating ground truth

pub mod blocks;
pub mod data;
pub mod error;
pub mod kernels;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod tape;
pub mod train;

pub use error::{Error, ErrorKind, Result};
