//! GRU layer, reset-before-candidate variant, gate order [z, r, n] in the
//! packed weights: h' = (1-z) (.) h + z (.) tanh(Wn x + Un (r (.) h) + bn).

use crate::error::Result;
use crate::kernels::{sigmoid, Rng};
use crate::layers::{init_orthogonal, init_uniform_fan_in};
use crate::model::{ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct GruParams {
    /// Input weights [3H, in].
    pub wx: ParamId,
    /// Recurrent weights [3H, H].
    pub wh: ParamId,
    /// Biases [3H].
    pub b: ParamId,
    pub in_dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub struct GruState {
    pub h: Vec<f64>,
}

impl GruState {
    pub fn new(p: &GruParams) -> Self {
        GruState {
            h: vec![0.0; p.hidden],
        }
    }

    pub fn reset(&mut self) {
        self.h.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GruStateNodes {
    pub h: NodeId,
}

/// Parameter leaves, pushed once per tape and shared by all steps.
#[derive(Debug, Clone, Copy)]
pub struct GruNodes {
    pub wx: NodeId,
    pub wh: NodeId,
    pub b: NodeId,
}

impl GruParams {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
    ) -> Result<Self> {
        let wx = store.declare(&format!("{prefix}.wx"), &[3 * hidden, in_dim])?;
        let wh = store.declare(&format!("{prefix}.wh"), &[3 * hidden, hidden])?;
        let b = store.declare(&format!("{prefix}.b"), &[3 * hidden])?;
        Ok(GruParams {
            wx,
            wh,
            b,
            in_dim,
            hidden,
        })
    }

    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        let h = self.hidden;
        if self.in_dim > 0 {
            init_uniform_fan_in(store.values_mut(self.wx), self.in_dim, rng);
        }
        let mut block = vec![0.0; h * h];
        for gate in 0..3 {
            init_orthogonal(&mut block, h, rng);
            let wh = store.values_mut(self.wh);
            wh[gate * h * h..(gate + 1) * h * h].copy_from_slice(&block);
        }
        for v in store.values_mut(self.b) {
            *v = 0.0;
        }
    }

    pub fn step(&self, store: &WeightStore, state: &mut GruState, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.hidden);
        let h = self.hidden;
        let wx = store.values(self.wx);
        let wh = store.values(self.wh);
        let b = store.values(self.b);
        debug_assert!(3 * h <= 24);
        let mut pre = [0.0f64; 24];
        let pre = &mut pre[..2 * h];
        // z and r gates from the first 2H rows
        for i in 0..2 * h {
            let mut acc_x = 0.0;
            for j in 0..self.in_dim {
                acc_x += wx[i * self.in_dim + j] * x[j];
            }
            let mut acc_h = 0.0;
            for j in 0..h {
                acc_h += wh[i * h + j] * state.h[j];
            }
            pre[i] = acc_x + acc_h + b[i];
        }
        let mut z = [0.0f64; 8];
        let mut r = [0.0f64; 8];
        for i in 0..h {
            z[i] = sigmoid(pre[i]);
            r[i] = sigmoid(pre[h + i]);
        }
        // candidate from the last H rows, recurrent term gated by r
        let mut rh = [0.0f64; 8];
        for i in 0..h {
            rh[i] = r[i] * state.h[i];
        }
        for i in 0..h {
            let row = 2 * h + i;
            let mut acc_x = 0.0;
            for j in 0..self.in_dim {
                acc_x += wx[row * self.in_dim + j] * x[j];
            }
            let mut acc_h = 0.0;
            for j in 0..h {
                acc_h += wh[row * h + j] * rh[j];
            }
            let n = (acc_x + acc_h + b[row]).tanh();
            let keep = (1.0 + (-z[i])) * state.h[i];
            out[i] = keep + z[i] * n;
        }
        state.h.copy_from_slice(out);
    }

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> GruNodes {
        GruNodes {
            wx: tape.param(store, self.wx),
            wh: tape.param(store, self.wh),
            b: tape.param(store, self.b),
        }
    }

    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &GruNodes,
        state: &GruStateNodes,
        x: NodeId,
    ) -> (NodeId, GruStateNodes) {
        let h = self.hidden;
        let d = self.in_dim;
        let (wx, wh, b) = (nodes.wx, nodes.wh, nodes.b);

        let wx_zr = tape.slice(wx, 0, 2 * h * d);
        let wh_zr = tape.slice(wh, 0, 2 * h * h);
        let b_zr = tape.slice(b, 0, 2 * h);
        let px = tape.matvec(wx_zr, x, 2 * h, d);
        let ph = tape.matvec(wh_zr, state.h, 2 * h, h);
        let psum = tape.add(px, ph);
        let pre = tape.add(psum, b_zr);
        let z_pre = tape.slice(pre, 0, h);
        let r_pre = tape.slice(pre, h, h);
        let z = tape.sigmoid(z_pre);
        let r = tape.sigmoid(r_pre);

        let rh = tape.mul(r, state.h);
        let wx_n = tape.slice(wx, 2 * h * d, h * d);
        let wh_n = tape.slice(wh, 2 * h * h, h * h);
        let b_n = tape.slice(b, 2 * h, h);
        let nx = tape.matvec(wx_n, x, h, d);
        let nh = tape.matvec(wh_n, rh, h, h);
        let nsum = tape.add(nx, nh);
        let n_pre = tape.add(nsum, b_n);
        let n = tape.tanh(n_pre);

        let neg_z = tape.scale(z, -1.0);
        let one_minus_z = tape.add_const(neg_z, 1.0);
        let keep = tape.mul(one_minus_z, state.h);
        let zn = tape.mul(z, n);
        let h_new = tape.add(keep, zn);
        (h_new, GruStateNodes { h: h_new })
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &GruState) -> GruStateNodes {
        GruStateNodes {
            h: tape.constant(&state.h),
        }
    }
}
