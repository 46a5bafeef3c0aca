//! Selective state space layer (S6). The state matrix A is diagonal, real,
//! negative by construction (A = -exp(a_log)); B, C, and the step size are
//! recomputed from the current input every step:
//!   B = Wb j + bb,  C = Wc j + bc,  dt = softplus(Wd j + bd)
//!   abar[c,n] = exp(A[c,n] dt[c]),  bbar[c,n] = dt[c] B[n]
//!   h <- abar (.) h + bbar * j[c],  o[c] = <C, h[c]> + D[c] j[c]
//! With dt > 0 this keeps 0 < abar < 1 for every input, so the recurrence is
//! stable regardless of what the selection FCs produce.

use crate::error::Result;
use crate::kernels::{softplus, Rng};
use crate::layers::init_uniform_fan_in;
use crate::model::{ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct S6Params {
    /// A = -exp(a_log), per (channel, state).
    pub a_log: ParamId,
    /// Direct feedthrough per channel.
    pub d: ParamId,
    /// Input -> B selection: [state, channels] weights + [state] bias.
    pub wb_w: ParamId,
    pub wb_b: ParamId,
    /// Input -> C selection: [state, channels] weights + [state] bias.
    pub wc_w: ParamId,
    pub wc_b: ParamId,
    /// Input -> dt pre-activation: [channels, channels] weights + bias.
    pub wd_w: ParamId,
    pub wd_b: ParamId,
    pub channels: usize,
    pub state: usize,
}

/// Real hidden state flattened [channel][state].
#[derive(Debug, Clone)]
pub struct S6State {
    pub h: Vec<f64>,
}

impl S6State {
    pub fn new(p: &S6Params) -> Self {
        S6State {
            h: vec![0.0; p.channels * p.state],
        }
    }

    pub fn reset(&mut self) {
        self.h.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct S6StateNodes {
    pub h: NodeId,
}

/// Parameter leaves pushed once per tape and shared by all steps.
#[derive(Debug, Clone, Copy)]
pub struct S6ParamNodes {
    pub neg_a: NodeId,
    pub d: NodeId,
    pub wb_w: NodeId,
    pub wb_b: NodeId,
    pub wc_w: NodeId,
    pub wc_b: NodeId,
    pub wd_w: NodeId,
    pub wd_b: NodeId,
}

impl S6Params {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        channels: usize,
        state: usize,
    ) -> Result<Self> {
        Ok(S6Params {
            a_log: store.declare(&format!("{prefix}.a_log"), &[channels, state])?,
            d: store.declare(&format!("{prefix}.d"), &[channels])?,
            wb_w: store.declare(&format!("{prefix}.wb.w"), &[state, channels])?,
            wb_b: store.declare(&format!("{prefix}.wb.b"), &[state])?,
            wc_w: store.declare(&format!("{prefix}.wc.w"), &[state, channels])?,
            wc_b: store.declare(&format!("{prefix}.wc.b"), &[state])?,
            wd_w: store.declare(&format!("{prefix}.wd.w"), &[channels, channels])?,
            wd_b: store.declare(&format!("{prefix}.wd.b"), &[channels])?,
            channels,
            state,
        })
    }

    /// a_log = ln(1..N) per channel (A = -1..-N), D = 1, selection FCs small
    /// uniform, dt bias set so softplus lands log-uniform in [1e-3, 1e-1].
    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        {
            let a = store.values_mut(self.a_log);
            for c in 0..self.channels {
                for n in 0..self.state {
                    a[c * self.state + n] = ((n + 1) as f64).ln();
                }
            }
        }
        for v in store.values_mut(self.d) {
            *v = 1.0;
        }
        init_uniform_fan_in(store.values_mut(self.wb_w), self.channels, rng);
        init_uniform_fan_in(store.values_mut(self.wc_w), self.channels, rng);
        init_uniform_fan_in(store.values_mut(self.wd_w), self.channels, rng);
        for v in store.values_mut(self.wb_b) {
            *v = 0.0;
        }
        for v in store.values_mut(self.wc_b) {
            *v = 1.0;
        }
        let (lo, hi) = (1e-3_f64.ln(), 1e-1_f64.ln());
        for v in store.values_mut(self.wd_b) {
            // inverse softplus of a log-uniform dt draw
            let dt = rng.range(lo, hi).exp();
            *v = (dt.exp_m1()).ln();
        }
    }

    pub fn step(&self, store: &WeightStore, state: &mut S6State, j: &[f64], out: &mut [f64]) {
        debug_assert_eq!(j.len(), self.channels);
        let (ch, n) = (self.channels, self.state);
        let a_log = store.values(self.a_log);
        let d = store.values(self.d);
        let wb_w = store.values(self.wb_w);
        let wb_b = store.values(self.wb_b);
        let wc_w = store.values(self.wc_w);
        let wc_b = store.values(self.wc_b);
        let wd_w = store.values(self.wd_w);
        let wd_b = store.values(self.wd_b);

        debug_assert!(n <= 8 && ch <= 8);
        let mut b_sel = [0.0f64; 8];
        let mut c_sel = [0.0f64; 8];
        let mut dt = [0.0f64; 8];
        for i in 0..n {
            let mut acc = 0.0;
            for c in 0..ch {
                acc += wb_w[i * ch + c] * j[c];
            }
            b_sel[i] = acc + wb_b[i];
        }
        for i in 0..n {
            let mut acc = 0.0;
            for c in 0..ch {
                acc += wc_w[i * ch + c] * j[c];
            }
            c_sel[i] = acc + wc_b[i];
        }
        for i in 0..ch {
            let mut acc = 0.0;
            for c in 0..ch {
                acc += wd_w[i * ch + c] * j[c];
            }
            dt[i] = softplus(acc + wd_b[i]);
        }

        for c in 0..ch {
            let jc = j[c];
            let mut acc = 0.0;
            for k in 0..n {
                let i = c * n + k;
                let abar = ((-a_log[i].exp()) * dt[c]).exp();
                // open interval mathematically; the bounds are reachable
                // only when dt or A*dt underflows f64
                debug_assert!((0.0..=1.0).contains(&abar), "abar out of [0,1]: {abar}");
                let bbar = dt[c] * b_sel[k];
                let h_new = abar * state.h[i] + bbar * jc;
                state.h[i] = h_new;
                acc += c_sel[k] * h_new;
            }
            out[c] = acc + d[c] * jc;
        }
    }

    pub fn param_nodes(&self, tape: &mut Tape, store: &WeightStore) -> S6ParamNodes {
        let a_log = tape.param(store, self.a_log);
        let exp_a = tape.exp(a_log);
        let neg_a = tape.scale(exp_a, -1.0);
        S6ParamNodes {
            neg_a,
            d: tape.param(store, self.d),
            wb_w: tape.param(store, self.wb_w),
            wb_b: tape.param(store, self.wb_b),
            wc_w: tape.param(store, self.wc_w),
            wc_b: tape.param(store, self.wc_b),
            wd_w: tape.param(store, self.wd_w),
            wd_b: tape.param(store, self.wd_b),
        }
    }

    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &S6ParamNodes,
        state: &S6StateNodes,
        j: NodeId,
    ) -> (NodeId, S6StateNodes) {
        let (ch, n) = (self.channels, self.state);
        let b_mv = tape.matvec(nodes.wb_w, j, n, ch);
        let b_sel = tape.add(b_mv, nodes.wb_b);
        let c_mv = tape.matvec(nodes.wc_w, j, n, ch);
        let c_sel = tape.add(c_mv, nodes.wc_b);
        let d_mv = tape.matvec(nodes.wd_w, j, ch, ch);
        let d_pre = tape.add(d_mv, nodes.wd_b);
        let dt = tape.softplus(d_pre);

        let dt_n = tape.repeat_each(dt, n);
        let a_dt = tape.mul(nodes.neg_a, dt_n);
        let abar = tape.exp(a_dt);
        let b_t = tape.tile(b_sel, ch);
        let bbar = tape.mul(dt_n, b_t);
        let j_rep = tape.repeat_each(j, n);
        let decay = tape.mul(abar, state.h);
        let drive_j = tape.mul(bbar, j_rep);
        let h_new = tape.add(decay, drive_j);

        let c_t = tape.tile(c_sel, ch);
        let ch_prod = tape.mul(c_t, h_new);
        let acc = tape.sum_per_chan(ch_prod, n);
        let dj = tape.mul(nodes.d, j);
        let out = tape.add(acc, dj);
        (out, S6StateNodes { h: h_new })
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &S6State) -> S6StateNodes {
        S6StateNodes {
            h: tape.constant(&state.h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_store;

    #[test]
    fn zero_b_path_gives_pure_geometric_decay() {
        let mut store = test_store(&[]);
        let mut rng = Rng::new(80);
        let p = S6Params::declare(&mut store, "s6", 2, 3).unwrap();
        p.init(&mut store, &mut rng);
        for v in store.values_mut(p.wb_w) {
            *v = 0.0;
        }
        for v in store.values_mut(p.wb_b) {
            *v = 0.0;
        }
        let mut state = S6State::new(&p);
        for (i, v) in state.h.iter_mut().enumerate() {
            *v = 1.0 + i as f64;
        }
        let before = state.h.clone();
        let mut out = [0.0; 2];
        let j = [0.9, -1.4];
        p.step(&store, &mut state, &j, &mut out);
        // h' = abar (.) h: every element shrinks in magnitude, none flips sign
        for i in 0..state.h.len() {
            assert!(state.h[i] > 0.0 && state.h[i] < before[i]);
        }
    }

    #[test]
    fn softplus_zero_gives_half_abar_when_a_is_minus_one() {
        // all selection weights zero, dt bias 0 -> dt = ln 2; a_log = 0 so
        // A = -1 and abar = exp(-ln 2) = 0.5 exactly
        let mut store = test_store(&[]);
        let p = S6Params::declare(&mut store, "s6", 1, 1).unwrap();
        // a_log defaults to 0 in a fresh store
        store.values_mut(p.wc_b)[0] = 1.0;
        let mut state = S6State::new(&p);
        state.h[0] = 1.0;
        let mut out = [0.0; 1];
        p.step(&store, &mut state, &[0.0], &mut out);
        assert!((state.h[0] - 0.5).abs() < 1e-15);
        p.step(&store, &mut state, &[0.0], &mut out);
        assert!((state.h[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn full_step_matches_naive_oracle() {
        // 1 channel, N = 2, hand-picked parameters; the oracle recomputes
        // every intermediate quantity independently.
        let mut store = test_store(&[]);
        let p = S6Params::declare(&mut store, "s6", 1, 2).unwrap();
        store.values_mut(p.a_log).copy_from_slice(&[0.2, -0.4]);
        store.values_mut(p.d).copy_from_slice(&[0.7]);
        store.values_mut(p.wb_w).copy_from_slice(&[0.3, -0.6]);
        store.values_mut(p.wb_b).copy_from_slice(&[0.1, 0.2]);
        store.values_mut(p.wc_w).copy_from_slice(&[-0.5, 0.8]);
        store.values_mut(p.wc_b).copy_from_slice(&[0.4, -0.3]);
        store.values_mut(p.wd_w).copy_from_slice(&[0.9]);
        store.values_mut(p.wd_b).copy_from_slice(&[-0.2]);

        let mut state = S6State::new(&p);
        let mut out = [0.0; 1];
        let inputs = [0.5, -1.2, 0.3, 0.0, 2.0];
        let mut oracle_h = [0.0f64; 2];
        for &j in &inputs {
            p.step(&store, &mut state, &[j], &mut out);

            // independent recomputation
            let b = [0.3 * j + 0.1, -0.6 * j + 0.2];
            let c = [-0.5 * j + 0.4, 0.8 * j - 0.3];
            let dt = (1.0 + (0.9 * j - 0.2f64).exp()).ln();
            let mut o = 0.7 * j;
            for k in 0..2 {
                let a = -([0.2, -0.4][k] as f64).exp();
                let abar = (a * dt).exp();
                oracle_h[k] = abar * oracle_h[k] + dt * b[k] * j;
                o += c[k] * oracle_h[k];
            }
            assert!((out[0] - o).abs() < 1e-12, "{} vs {o}", out[0]);
        }
    }

    #[test]
    fn s6_violates_superposition() {
        let mut store = test_store(&[]);
        let mut rng = Rng::new(81);
        let p = S6Params::declare(&mut store, "s6", 3, 4).unwrap();
        p.init(&mut store, &mut rng);
        let t = 32;
        let u: Vec<[f64; 3]> = (0..t)
            .map(|_| [rng.normal(), rng.normal(), rng.normal()])
            .collect();
        let v: Vec<[f64; 3]> = (0..t)
            .map(|_| [rng.normal(), rng.normal(), rng.normal()])
            .collect();
        let run = |inputs: &[[f64; 3]]| -> Vec<[f64; 3]> {
            let mut state = S6State::new(&p);
            let mut out = [0.0; 3];
            inputs
                .iter()
                .map(|x| {
                    p.step(&store, &mut state, x, &mut out);
                    out
                })
                .collect()
        };
        let mixed: Vec<[f64; 3]> = u
            .iter()
            .zip(&v)
            .map(|(x, y)| {
                [
                    2.0 * x[0] + 0.5 * y[0],
                    2.0 * x[1] + 0.5 * y[1],
                    2.0 * x[2] + 0.5 * y[2],
                ]
            })
            .collect();
        let (ru, rv, rm) = (run(&u), run(&v), run(&mixed));
        let mut max_violation = 0.0f64;
        for i in 0..t {
            for c in 0..3 {
                let lin = 2.0 * ru[i][c] + 0.5 * rv[i][c];
                max_violation = max_violation.max((rm[i][c] - lin).abs());
            }
        }
        assert!(
            max_violation > 1e-6,
            "selective layer looked linear (max violation {max_violation})"
        );
    }

    #[test]
    fn tape_matches_streaming_bitwise() {
        let mut store = test_store(&[]);
        let mut rng = Rng::new(82);
        let p = S6Params::declare(&mut store, "s6", 3, 4).unwrap();
        p.init(&mut store, &mut rng);
        let mut state = S6State::new(&p);

        let mut tape = Tape::new();
        tape.reset(store.len());
        let nodes = p.param_nodes(&mut tape, &store);
        let mut snodes = p.state_nodes(&mut tape, &state);
        let mut out = [0.0; 3];
        for _ in 0..10 {
            let j = [rng.normal(), rng.normal(), rng.normal()];
            p.step(&store, &mut state, &j, &mut out);
            let jn = tape.constant(&j);
            let (y, next) = p.step_tape(&mut tape, &nodes, &snodes, jn);
            snodes = next;
            for c in 0..3 {
                assert_eq!(out[c].to_bits(), tape.val(y)[c].to_bits());
            }
        }
    }
}
