//! Depthwise causal convolution in single-step streaming form: a FIFO keeps
//! the previous k-1 channel vectors, each step emits one output vector.

use crate::error::Result;
use crate::kernels::Rng;
use crate::model::{ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct CausalConvParams {
    /// Kernel layout [channel][tap]; the last tap weights the newest input.
    pub kernel: ParamId,
    pub bias: ParamId,
    pub channels: usize,
    pub k: usize,
}

/// Previous k-1 inputs, oldest first, flattened [slot][channel].
#[derive(Debug, Clone)]
pub struct ConvState {
    fifo: Vec<f64>,
    channels: usize,
}

impl ConvState {
    pub fn new(p: &CausalConvParams) -> Self {
        ConvState {
            fifo: vec![0.0; (p.k - 1) * p.channels],
            channels: p.channels,
        }
    }

    pub fn reset(&mut self) {
        self.fifo.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn flat(&self) -> &[f64] {
        &self.fifo
    }

    pub fn load_flat(&mut self, vals: &[f64]) {
        self.fifo.copy_from_slice(vals);
    }

    fn slot(&self, t: usize) -> &[f64] {
        &self.fifo[t * self.channels..(t + 1) * self.channels]
    }
}

/// FIFO entries as tape nodes, oldest first.
#[derive(Debug, Clone)]
pub struct ConvStateNodes {
    pub fifo: Vec<NodeId>,
}

/// Parameter leaves, pushed once per tape and shared by all steps.
#[derive(Debug, Clone, Copy)]
pub struct ConvNodes {
    pub kernel: NodeId,
    pub bias: NodeId,
}

impl CausalConvParams {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        channels: usize,
        k: usize,
    ) -> Result<Self> {
        let kernel = store.declare(&format!("{prefix}.kernel"), &[channels, k])?;
        let bias = store.declare(&format!("{prefix}.bias"), &[channels])?;
        Ok(CausalConvParams {
            kernel,
            bias,
            channels,
            k,
        })
    }

    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        let bound = 1.0 / (self.k as f64).sqrt();
        for v in store.values_mut(self.kernel) {
            *v = rng.range(-bound, bound);
        }
        for v in store.values_mut(self.bias) {
            *v = 0.0;
        }
    }

    /// y[c] = bias[c] + sum_t kernel[c][t] * u_t[c], u = [fifo.., x];
    /// advances the FIFO by one.
    pub fn step(&self, store: &WeightStore, state: &mut ConvState, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.channels);
        debug_assert_eq!(state.fifo.len(), (self.k - 1) * self.channels);
        let kernel = store.values(self.kernel);
        let bias = store.values(self.bias);
        for c in 0..self.channels {
            let mut acc = bias[c];
            for t in 0..self.k - 1 {
                acc += kernel[c * self.k + t] * state.slot(t)[c];
            }
            acc += kernel[c * self.k + self.k - 1] * x[c];
            out[c] = acc;
        }
        state.fifo.copy_within(self.channels.., 0);
        let tail = state.fifo.len() - self.channels;
        state.fifo[tail..].copy_from_slice(x);
    }

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> ConvNodes {
        ConvNodes {
            kernel: tape.param(store, self.kernel),
            bias: tape.param(store, self.bias),
        }
    }

    /// Tape form. Returns (output, advanced FIFO nodes).
    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &ConvNodes,
        state: &ConvStateNodes,
        x: NodeId,
    ) -> (NodeId, ConvStateNodes) {
        debug_assert_eq!(state.fifo.len(), self.k - 1);
        let mut inputs = state.fifo.clone();
        inputs.push(x);
        let y = tape.conv_step(nodes.kernel, nodes.bias, &inputs);
        let fifo = inputs[1..].to_vec();
        (y, ConvStateNodes { fifo })
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &ConvState) -> ConvStateNodes {
        let fifo = (0..self.k - 1)
            .map(|t| tape.constant(state.slot(t)))
            .collect();
        ConvStateNodes { fifo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_store;

    #[test]
    fn current_tap_identity_kernel_passes_input() {
        let mut store = test_store(&[]);
        let p = CausalConvParams::declare(&mut store, "conv", 2, 4).unwrap();
        for c in 0..2 {
            store.values_mut(p.kernel)[c * 4 + 3] = 1.0;
        }
        let mut state = ConvState::new(&p);
        let mut out = [0.0; 2];
        for step in 0..5 {
            let x = [step as f64, -(step as f64)];
            p.step(&store, &mut state, &x, &mut out);
            assert_eq!(out, x);
        }
    }

    #[test]
    fn zero_kernel_outputs_bias() {
        let mut store = test_store(&[]);
        let p = CausalConvParams::declare(&mut store, "conv", 3, 4).unwrap();
        store.values_mut(p.bias).copy_from_slice(&[0.5, -1.0, 2.0]);
        let mut state = ConvState::new(&p);
        let mut out = [0.0; 3];
        p.step(&store, &mut state, &[9.0, 9.0, 9.0], &mut out);
        assert_eq!(out, [0.5, -1.0, 2.0]);
    }

    #[test]
    fn two_tap_moving_average_by_hand() {
        let mut store = test_store(&[]);
        let p = CausalConvParams::declare(&mut store, "conv", 1, 2).unwrap();
        store.values_mut(p.kernel).copy_from_slice(&[0.5, 0.5]);
        let mut state = ConvState::new(&p);
        let mut out = [0.0; 1];
        p.step(&store, &mut state, &[1.0], &mut out);
        assert_eq!(out, [0.5]);
        p.step(&store, &mut state, &[3.0], &mut out);
        assert_eq!(out, [2.0]);
    }

    #[test]
    fn reset_then_replay_is_bit_identical() {
        let mut rng = Rng::new(40);
        let mut store = test_store(&[]);
        let p = CausalConvParams::declare(&mut store, "conv", 3, 4).unwrap();
        p.init(&mut store, &mut rng);
        let inputs: Vec<[f64; 3]> = (0..16)
            .map(|_| [rng.normal(), rng.normal(), rng.normal()])
            .collect();
        let mut state = ConvState::new(&p);
        let mut first = Vec::new();
        let mut out = [0.0; 3];
        for x in &inputs {
            p.step(&store, &mut state, x, &mut out);
            first.push(out);
        }
        state.reset();
        for (i, x) in inputs.iter().enumerate() {
            p.step(&store, &mut state, x, &mut out);
            for c in 0..3 {
                assert_eq!(out[c].to_bits(), first[i][c].to_bits());
            }
        }
    }

    #[test]
    fn tape_matches_streaming_bitwise() {
        let mut rng = Rng::new(41);
        let mut store = test_store(&[]);
        let p = CausalConvParams::declare(&mut store, "conv", 3, 4).unwrap();
        p.init(&mut store, &mut rng);
        store.values_mut(p.bias).copy_from_slice(&[0.1, -0.2, 0.3]);

        let mut state = ConvState::new(&p);
        let mut tape = Tape::new();
        tape.reset(store.len());
        let pnodes = p.nodes(&mut tape, &store);
        let mut nodes = p.state_nodes(&mut tape, &state);
        let mut out = [0.0; 3];
        for _ in 0..8 {
            let x = [rng.normal(), rng.normal(), rng.normal()];
            p.step(&store, &mut state, &x, &mut out);
            let xn = tape.constant(&x);
            let (y, next) = p.step_tape(&mut tape, &pnodes, &nodes, xn);
            nodes = next;
            for c in 0..3 {
                assert_eq!(out[c].to_bits(), tape.val(y)[c].to_bits());
            }
        }
    }
}
