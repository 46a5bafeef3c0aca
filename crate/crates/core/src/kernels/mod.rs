//! Dependency-free numerical primitives: dense arrays, complex vectors, a
//! power-of-two real FFT, the activation functions shared by every layer,
//! and a small deterministic RNG for seeded initialization.

mod act;
mod fft;
mod rng;
mod tensor;

pub use act::{gelu, sigmoid, softplus, softsign, swish, tanh};
pub(crate) use act::{gelu_tanh_arg, gelu_tanh_arg_d};
pub use fft::{rfft, rfft_magnitude, rfft_magnitude_into, rfft_magnitude_with, Fft};
pub use rng::Rng;
pub use tensor::{matvec, ComplexVec, Tensor};
