//! Diagonal state space layer (S4D): complex diagonal state matrix shared
//! across channels, per-channel timescale, input-independent B/C/D.
//!
//! Continuous dynamics are discretized with zero-order hold:
//!   abar = exp(dt * lambda),  bbar = (abar - 1)/lambda * B
//! and the per-channel recurrence is
//!   h <- abar (.) h + bbar * j[c],   o[c] = Re(<C[c], h>) + D[c] * j[c].

use crate::error::{Error, Result};
use crate::kernels::Rng;
use crate::model::{ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct S4dParams {
    /// Diagonal state matrix, Re(lambda) < 0 required, shared across channels.
    pub lambda_re: ParamId,
    pub lambda_im: ParamId,
    /// Per-channel log timescale; dt = exp(log_dt).
    pub log_dt: ParamId,
    /// Input map, shared across channels.
    pub b_re: ParamId,
    pub b_im: ParamId,
    /// Output map, per channel: [channels, state].
    pub c_re: ParamId,
    pub c_im: ParamId,
    /// Direct feedthrough per channel.
    pub d: ParamId,
    pub channels: usize,
    pub state: usize,
}

/// Cached discrete dynamics, one (abar, bbar) pair per (channel, state dim).
#[derive(Debug, Clone)]
pub struct S4dDisc {
    pub abar_re: Vec<f64>,
    pub abar_im: Vec<f64>,
    pub bbar_re: Vec<f64>,
    pub bbar_im: Vec<f64>,
}

/// Complex hidden state flattened [channel][state].
#[derive(Debug, Clone)]
pub struct S4dState {
    pub h_re: Vec<f64>,
    pub h_im: Vec<f64>,
}

impl S4dState {
    pub fn new(p: &S4dParams) -> Self {
        S4dState {
            h_re: vec![0.0; p.channels * p.state],
            h_im: vec![0.0; p.channels * p.state],
        }
    }

    pub fn reset(&mut self) {
        self.h_re.iter_mut().for_each(|v| *v = 0.0);
        self.h_im.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct S4dStateNodes {
    pub h_re: NodeId,
    pub h_im: NodeId,
}

/// Discretization subgraph plus the output-map leaves, pushed once per tape.
#[derive(Debug, Clone, Copy)]
pub struct S4dDiscNodes {
    pub abar_re: NodeId,
    pub abar_im: NodeId,
    pub bbar_re: NodeId,
    pub bbar_im: NodeId,
    pub c_re: NodeId,
    pub c_im: NodeId,
    pub d: NodeId,
}

impl S4dParams {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        channels: usize,
        state: usize,
    ) -> Result<Self> {
        Ok(S4dParams {
            lambda_re: store.declare(&format!("{prefix}.lambda_re"), &[state])?,
            lambda_im: store.declare(&format!("{prefix}.lambda_im"), &[state])?,
            log_dt: store.declare(&format!("{prefix}.log_dt"), &[channels])?,
            b_re: store.declare(&format!("{prefix}.b_re"), &[state])?,
            b_im: store.declare(&format!("{prefix}.b_im"), &[state])?,
            c_re: store.declare(&format!("{prefix}.c_re"), &[channels, state])?,
            c_im: store.declare(&format!("{prefix}.c_im"), &[channels, state])?,
            d: store.declare(&format!("{prefix}.d"), &[channels])?,
            channels,
            state,
        })
    }

    /// S4D-Lin initialization: lambda_n = -1/2 + i pi n, dt log-uniform in
    /// [1e-4, 1e-1], B = 1, C small random, D = 1.
    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        for (n, v) in store.values_mut(self.lambda_re).iter_mut().enumerate() {
            let _ = n;
            *v = -0.5;
        }
        for (n, v) in store.values_mut(self.lambda_im).iter_mut().enumerate() {
            *v = std::f64::consts::PI * n as f64;
        }
        let (lo, hi) = (1e-4_f64.ln(), 1e-1_f64.ln());
        for v in store.values_mut(self.log_dt) {
            *v = rng.range(lo, hi);
        }
        for v in store.values_mut(self.b_re) {
            *v = 1.0;
        }
        for v in store.values_mut(self.b_im) {
            *v = 0.0;
        }
        for v in store.values_mut(self.c_re) {
            *v = 0.1 * rng.normal();
        }
        for v in store.values_mut(self.c_im) {
            *v = 0.1 * rng.normal();
        }
        for v in store.values_mut(self.d) {
            *v = 1.0;
        }
    }

    /// ZOH discretization. Errors on non-negative Re(lambda), which would
    /// make |abar| >= 1.
    pub fn discretize(&self, store: &WeightStore) -> Result<S4dDisc> {
        let (ch, n) = (self.channels, self.state);
        let lre = store.values(self.lambda_re);
        let lim = store.values(self.lambda_im);
        for &re in lre {
            if re >= 0.0 {
                return Err(Error::Numeric(format!(
                    "S4D requires Re(lambda) < 0 for stability, found {re}"
                )));
            }
        }
        let log_dt = store.values(self.log_dt);
        let bre = store.values(self.b_re);
        let bim = store.values(self.b_im);
        let mut disc = S4dDisc {
            abar_re: vec![0.0; ch * n],
            abar_im: vec![0.0; ch * n],
            bbar_re: vec![0.0; ch * n],
            bbar_im: vec![0.0; ch * n],
        };
        for c in 0..ch {
            let dt = log_dt[c].exp();
            for k in 0..n {
                let i = c * n + k;
                let arg_re = dt * lre[k];
                let arg_im = dt * lim[k];
                let radial = arg_re.exp();
                let are = radial * arg_im.cos();
                let aim = radial * arg_im.sin();
                disc.abar_re[i] = are;
                disc.abar_im[i] = aim;
                // (abar - 1) / lambda, then * B, in complex arithmetic
                let num_re = are - 1.0;
                let num_im = aim;
                let den = lre[k] * lre[k] + lim[k] * lim[k];
                let inv_re = lre[k] / den;
                let inv_im = (-lim[k]) / den;
                let t_re = num_re * inv_re - num_im * inv_im;
                let t_im = num_re * inv_im + num_im * inv_re;
                disc.bbar_re[i] = t_re * bre[k] - t_im * bim[k];
                disc.bbar_im[i] = t_re * bim[k] + t_im * bre[k];
                // |abar| < 1 mathematically; equality is reachable only
                // when dt underflows f64
                debug_assert!(are * are + aim * aim <= 1.0, "unstable |abar| > 1");
            }
        }
        Ok(disc)
    }

    /// One streaming step with cached dynamics.
    pub fn step(
        &self,
        store: &WeightStore,
        disc: &S4dDisc,
        state: &mut S4dState,
        j: &[f64],
        out: &mut [f64],
    ) {
        debug_assert_eq!(j.len(), self.channels);
        let (ch, n) = (self.channels, self.state);
        let cre = store.values(self.c_re);
        let cim = store.values(self.c_im);
        let d = store.values(self.d);
        for c in 0..ch {
            let jc = j[c];
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for k in 0..n {
                let i = c * n + k;
                let hr = disc.abar_re[i] * state.h_re[i] - disc.abar_im[i] * state.h_im[i]
                    + disc.bbar_re[i] * jc;
                let hi = disc.abar_re[i] * state.h_im[i] + disc.abar_im[i] * state.h_re[i]
                    + disc.bbar_im[i] * jc;
                state.h_re[i] = hr;
                state.h_im[i] = hi;
                acc_re += cre[i] * hr;
                acc_im += cim[i] * hi;
            }
            out[c] = (acc_re - acc_im) + d[c] * jc;
        }
    }

    /// Pushes the discretization subgraph; reused by every step of a tape.
    pub fn discretize_tape(&self, tape: &mut Tape, store: &WeightStore) -> S4dDiscNodes {
        let (ch, n) = (self.channels, self.state);
        let lre = tape.param(store, self.lambda_re);
        let lim = tape.param(store, self.lambda_im);
        let log_dt = tape.param(store, self.log_dt);
        let bre = tape.param(store, self.b_re);
        let bim = tape.param(store, self.b_im);
        let c_re = tape.param(store, self.c_re);
        let c_im = tape.param(store, self.c_im);
        let d = tape.param(store, self.d);

        let dt = tape.exp(log_dt);
        let dt_n = tape.repeat_each(dt, n);
        let lre_t = tape.tile(lre, ch);
        let lim_t = tape.tile(lim, ch);
        let arg_re = tape.mul(dt_n, lre_t);
        let arg_im = tape.mul(dt_n, lim_t);
        let radial = tape.exp(arg_re);
        let cos_im = tape.cos(arg_im);
        let sin_im = tape.sin(arg_im);
        let abar_re = tape.mul(radial, cos_im);
        let abar_im = tape.mul(radial, sin_im);

        let num_re = tape.add_const(abar_re, -1.0);
        let lre_sq = tape.mul(lre, lre);
        let lim_sq = tape.mul(lim, lim);
        let den = tape.add(lre_sq, lim_sq);
        let den_t = tape.tile(den, ch);
        let inv_re = tape.div(lre_t, den_t);
        let neg_lim_t = tape.scale(lim_t, -1.0);
        let inv_im = tape.div(neg_lim_t, den_t);
        let a1 = tape.mul(num_re, inv_re);
        let a2 = tape.mul(abar_im, inv_im);
        let t_re = tape.sub(a1, a2);
        let a3 = tape.mul(num_re, inv_im);
        let a4 = tape.mul(abar_im, inv_re);
        let t_im = tape.add(a3, a4);
        let bre_t = tape.tile(bre, ch);
        let bim_t = tape.tile(bim, ch);
        let b1 = tape.mul(t_re, bre_t);
        let b2 = tape.mul(t_im, bim_t);
        let bbar_re = tape.sub(b1, b2);
        let b3 = tape.mul(t_re, bim_t);
        let b4 = tape.mul(t_im, bre_t);
        let bbar_im = tape.add(b3, b4);

        S4dDiscNodes {
            abar_re,
            abar_im,
            bbar_re,
            bbar_im,
            c_re,
            c_im,
            d,
        }
    }

    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &S4dDiscNodes,
        state: &S4dStateNodes,
        j: NodeId,
    ) -> (NodeId, S4dStateNodes) {
        let n = self.state;
        let j_rep = tape.repeat_each(j, n);
        let ar_hr = tape.mul(nodes.abar_re, state.h_re);
        let ai_hi = tape.mul(nodes.abar_im, state.h_im);
        let rot_re = tape.sub(ar_hr, ai_hi);
        let br_j = tape.mul(nodes.bbar_re, j_rep);
        let h_re = tape.add(rot_re, br_j);
        let ar_hi = tape.mul(nodes.abar_re, state.h_im);
        let ai_hr = tape.mul(nodes.abar_im, state.h_re);
        let rot_im = tape.add(ar_hi, ai_hr);
        let bi_j = tape.mul(nodes.bbar_im, j_rep);
        let h_im = tape.add(rot_im, bi_j);

        let cr_hr = tape.mul(nodes.c_re, h_re);
        let ci_hi = tape.mul(nodes.c_im, h_im);
        let acc_re = tape.sum_per_chan(cr_hr, n);
        let acc_im = tape.sum_per_chan(ci_hi, n);
        let re_part = tape.sub(acc_re, acc_im);
        let dj = tape.mul(nodes.d, j);
        let out = tape.add(re_part, dj);
        (out, S4dStateNodes { h_re, h_im })
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &S4dState) -> S4dStateNodes {
        S4dStateNodes {
            h_re: tape.constant(&state.h_re),
            h_im: tape.constant(&state.h_im),
        }
    }
}
