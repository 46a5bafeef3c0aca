//! Adam optimizer and global gradient-norm clipping.

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Scales `grads` in place to `max_norm` when the global L2 norm exceeds
/// it; returns the pre-clip norm. Direction is preserved exactly.
pub fn clip_by_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Standard bias-corrected Adam over a flat parameter buffer.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moments(&self) -> &[f64] {
        &self.v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_scales_above_threshold() {
        let mut g = [3.0, 4.0];
        let norm = clip_by_global_norm(&mut g, 1.0);
        assert_eq!(norm, 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15);
        assert!((g[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn clip_leaves_small_gradients_alone() {
        let mut g = [0.1, 0.1];
        clip_by_global_norm(&mut g, 1.0);
        assert_eq!(g, [0.1, 0.1]);
        let mut z = [0.0, 0.0];
        clip_by_global_norm(&mut z, 1.0);
        assert_eq!(z, [0.0, 0.0]);
    }

    #[test]
    fn clip_preserves_direction() {
        let g0 = [3.0, -4.0, 12.0];
        let mut g = g0;
        clip_by_global_norm(&mut g, 1.0);
        let dot: f64 = g.iter().zip(&g0).map(|(a, b)| a * b).sum();
        let n: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        let n0: f64 = g0.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((dot / (n * n0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_step_moves_by_almost_lr() {
        let mut adam = Adam::new(1);
        let mut p = [0.0];
        adam.step(&mut p, &[1.0], 0.01);
        // bias-corrected first step: -lr * 1/(1 + eps)
        assert!((p[0] + 0.01 / (1.0 + ADAM_EPS)).abs() < 1e-12);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut adam = Adam::new(3);
        let mut p = [1.0, -2.0, 0.5];
        for _ in 0..50 {
            adam.step(&mut p, &[0.0; 3], 0.1);
        }
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn two_steps_match_hand_rolled_oracle() {
        let mut adam = Adam::new(1);
        let mut p = [0.3];
        let g = 0.7;
        let lr = 0.05;
        adam.step(&mut p, &[g], lr);
        adam.step(&mut p, &[g], lr);

        // independent recomputation
        let (b1, b2, eps) = (ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
        let mut theta = 0.3;
        let mut m = 0.0;
        let mut v = 0.0;
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            theta -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((p[0] - theta).abs() < 1e-12, "{} vs {theta}", p[0]);
    }
}
