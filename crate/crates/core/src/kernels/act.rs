//! Elementwise activation functions. All are used both by the streaming
//! forward path and the autodiff tape, so each formula lives here exactly
//! once.

/// Numerically-guarded logistic sigmoid, strictly inside (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// softsign(x) = x / (1 + |x|), strictly inside (-1, 1).
pub fn softsign(x: f64) -> f64 {
    x / (1.0 + x.abs())
}

/// Swish gate with learnable sharpness: x * sigmoid(beta * x).
pub fn swish(x: f64, beta: f64) -> f64 {
    x * sigmoid(beta * x)
}

const GELU_C1: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_C2: f64 = 0.044715;

/// GELU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi)(x + 0.044715 x^3))).
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + gelu_tanh_arg(x).tanh())
}

pub(crate) fn gelu_tanh_arg(x: f64) -> f64 {
    GELU_C1 * (x + GELU_C2 * x * x * x)
}

pub(crate) fn gelu_tanh_arg_d(x: f64) -> f64 {
    GELU_C1 * (1.0 + 3.0 * GELU_C2 * x * x)
}

/// softplus(x) = ln(1 + e^x), computed in a form stable for large |x|.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}
