//! LSTM layer, no peepholes, gate order [i, f, g, o] in the packed weights.

use crate::error::Result;
use crate::kernels::{sigmoid, Rng};
use crate::layers::{init_orthogonal, init_uniform_fan_in};
use crate::model::{ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct LstmParams {
    /// Input weights [4H, in].
    pub wx: ParamId,
    /// Recurrent weights [4H, H].
    pub wh: ParamId,
    /// Biases [4H].
    pub b: ParamId,
    pub in_dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn new(p: &LstmParams) -> Self {
        LstmState {
            h: vec![0.0; p.hidden],
            c: vec![0.0; p.hidden],
        }
    }

    pub fn reset(&mut self) {
        self.h.iter_mut().for_each(|v| *v = 0.0);
        self.c.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmStateNodes {
    pub h: NodeId,
    pub c: NodeId,
}

/// Parameter leaves, pushed once per tape and shared by all steps.
#[derive(Debug, Clone, Copy)]
pub struct LstmNodes {
    pub wx: NodeId,
    pub wh: NodeId,
    pub b: NodeId,
}

impl LstmParams {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
    ) -> Result<Self> {
        let wx = store.declare(&format!("{prefix}.wx"), &[4 * hidden, in_dim])?;
        let wh = store.declare(&format!("{prefix}.wh"), &[4 * hidden, hidden])?;
        let b = store.declare(&format!("{prefix}.b"), &[4 * hidden])?;
        Ok(LstmParams {
            wx,
            wh,
            b,
            in_dim,
            hidden,
        })
    }

    /// Input weights uniform +-1/sqrt(fan_in), recurrent blocks orthogonal,
    /// biases zero except forget gate at +1.
    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        let h = self.hidden;
        init_uniform_fan_in(store.values_mut(self.wx), self.in_dim, rng);
        {
            let mut block = vec![0.0; h * h];
            for gate in 0..4 {
                init_orthogonal(&mut block, h, rng);
                let wh = store.values_mut(self.wh);
                wh[gate * h * h..(gate + 1) * h * h].copy_from_slice(&block);
            }
        }
        let b = store.values_mut(self.b);
        for v in b.iter_mut() {
            *v = 0.0;
        }
        for i in 0..h {
            b[h + i] = 1.0; // forget gate
        }
    }

    pub fn step(&self, store: &WeightStore, state: &mut LstmState, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.hidden);
        let h = self.hidden;
        let wx = store.values(self.wx);
        let wh = store.values(self.wh);
        let b = store.values(self.b);
        debug_assert!(4 * h <= 32);
        let mut gates = [0.0f64; 32];
        let gates = &mut gates[..4 * h];
        for i in 0..4 * h {
            let mut acc_x = 0.0;
            for j in 0..self.in_dim {
                acc_x += wx[i * self.in_dim + j] * x[j];
            }
            let mut acc_h = 0.0;
            for j in 0..h {
                acc_h += wh[i * h + j] * state.h[j];
            }
            gates[i] = acc_x + acc_h + b[i];
        }
        for i in 0..h {
            let ig = sigmoid(gates[i]);
            let fg = sigmoid(gates[h + i]);
            let gg = gates[2 * h + i].tanh();
            let og = sigmoid(gates[3 * h + i]);
            let c_new = fg * state.c[i] + ig * gg;
            state.c[i] = c_new;
            state.h[i] = og * c_new.tanh();
            out[i] = state.h[i];
        }
    }

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> LstmNodes {
        LstmNodes {
            wx: tape.param(store, self.wx),
            wh: tape.param(store, self.wh),
            b: tape.param(store, self.b),
        }
    }

    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &LstmNodes,
        state: &LstmStateNodes,
        x: NodeId,
    ) -> (NodeId, LstmStateNodes) {
        let h = self.hidden;
        let gx = tape.matvec(nodes.wx, x, 4 * h, self.in_dim);
        let gh = tape.matvec(nodes.wh, state.h, 4 * h, h);
        let gsum = tape.add(gx, gh);
        let gates = tape.add(gsum, nodes.b);
        let i_pre = tape.slice(gates, 0, h);
        let f_pre = tape.slice(gates, h, h);
        let g_pre = tape.slice(gates, 2 * h, h);
        let o_pre = tape.slice(gates, 3 * h, h);
        let ig = tape.sigmoid(i_pre);
        let fg = tape.sigmoid(f_pre);
        let gg = tape.tanh(g_pre);
        let og = tape.sigmoid(o_pre);
        let fc = tape.mul(fg, state.c);
        let igg = tape.mul(ig, gg);
        let c_new = tape.add(fc, igg);
        let ct = tape.tanh(c_new);
        let h_new = tape.mul(og, ct);
        (
            h_new,
            LstmStateNodes {
                h: h_new,
                c: c_new,
            },
        )
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &LstmState) -> LstmStateNodes {
        LstmStateNodes {
            h: tape.constant(&state.h),
            c: tape.constant(&state.c),
        }
    }
}
