//! Primitive layers. Each layer exposes a single-step streaming form
//! (`step`, plain f64) and a tape form (`step_tape`) that records the same
//! computation for reverse-mode differentiation. The two paths share scalar
//! kernels and accumulation order, so their outputs are bit-identical; tests
//! pin that equivalence.

mod conv;
mod dense;
mod gru;
mod lstm;
mod s4d;
mod s6;

pub use conv::{CausalConvParams, ConvNodes, ConvState, ConvStateNodes};
pub use dense::{Activation, DenseNodes, DenseParams};
pub use gru::{GruNodes, GruParams, GruState, GruStateNodes};
pub use lstm::{LstmNodes, LstmParams, LstmState, LstmStateNodes};
pub use s4d::{S4dDisc, S4dDiscNodes, S4dParams, S4dState, S4dStateNodes};
pub use s6::{S6ParamNodes, S6Params, S6State, S6StateNodes};

use crate::kernels::Rng;

/// Uniform init in +-1/sqrt(fan_in).
pub(crate) fn init_uniform_fan_in(vals: &mut [f64], fan_in: usize, rng: &mut Rng) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in vals.iter_mut() {
        *v = rng.range(-bound, bound);
    }
}

/// Random orthogonal n x n matrix via Gram-Schmidt on a normal draw.
pub(crate) fn init_orthogonal(vals: &mut [f64], n: usize, rng: &mut Rng) {
    debug_assert_eq!(vals.len(), n * n);
    loop {
        for v in vals.iter_mut() {
            *v = rng.normal();
        }
        if gram_schmidt_rows(vals, n) {
            return;
        }
        // near-singular draw; redo
    }
}

fn gram_schmidt_rows(m: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..i {
            let dot: f64 = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
            for k in 0..n {
                m[i * n + k] -= dot * m[j * n + k];
            }
        }
        let norm: f64 = (0..n).map(|k| m[i * n + k] * m[i * n + k]).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return false;
        }
        for k in 0..n {
            m[i * n + k] /= norm;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_init_has_orthonormal_rows() {
        let mut rng = Rng::new(5);
        let n = 6;
        let mut m = vec![0.0; n * n];
        init_orthogonal(&mut m, n, &mut rng);
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "rows {i},{j}: {dot}");
            }
        }
    }
}
