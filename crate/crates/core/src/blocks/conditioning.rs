//! Conditioning block: spectrum features feed a FiLM stage (compression
//! controls), a GLU, a GRU-driven Temporal FiLM stage (timing controls), and
//! a second GLU. Input, output and every intermediate vector have length 2.
//!
//! The spectrum features f come from a 2-filter conv with kernel one longer
//! than the FFT size, applied in valid mode to the 65 magnitude bins
//! zero-padded to 129, so each filter emits exactly one scalar per step.

use crate::error::Result;
use crate::kernels::{softsign, Rng};
use crate::layers::{
    Activation, DenseNodes, DenseParams, GruNodes, GruParams, GruState, GruStateNodes,
};
use crate::model::{ModelConfig, ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct ConditioningParams {
    /// Spectrum conv: [2, fft_size + 1] weights, [2] bias.
    pub spec_w: ParamId,
    pub spec_b: ParamId,
    /// FiLM dense (p_co || f) -> [a || b].
    pub film: DenseParams,
    /// First GLU dense, doubles 2 -> 4.
    pub glu1: DenseParams,
    /// Temporal FiLM GRU over (p_ti || f), hidden splits into [c || d].
    pub gru: GruParams,
    /// Second GLU dense, 2 -> 4.
    pub glu2: DenseParams,
    pub co_dim: usize,
    pub ti_dim: usize,
    pub bins: usize,
    pub kernel: usize,
    pub d_model: usize,
}

#[derive(Debug, Clone)]
pub struct ConditioningNodes {
    pub spec_w: NodeId,
    pub spec_b: NodeId,
    pub film: DenseNodes,
    pub glu1: DenseNodes,
    pub gru: GruNodes,
    pub glu2: DenseNodes,
}

impl ConditioningParams {
    pub fn declare(store: &mut WeightStore, prefix: &str, cfg: &ModelConfig) -> Result<Self> {
        let d = cfg.d_model;
        let co = cfg.device.co_dim();
        let ti = cfg.device.ti_dim();
        let bins = cfg.spectrum_bins();
        let kernel = cfg.spectrum_kernel();
        Ok(ConditioningParams {
            spec_w: store.declare(&format!("{prefix}.spec_conv.w"), &[d, kernel])?,
            spec_b: store.declare(&format!("{prefix}.spec_conv.b"), &[d])?,
            film: DenseParams::declare(
                store,
                &format!("{prefix}.film"),
                co + d,
                2 * d,
                Activation::Linear,
            )?,
            glu1: DenseParams::declare(store, &format!("{prefix}.glu1"), d, 2 * d, Activation::Linear)?,
            gru: GruParams::declare(store, &format!("{prefix}.gru"), ti + d, cfg.gru_hidden)?,
            glu2: DenseParams::declare(store, &format!("{prefix}.glu2"), d, 2 * d, Activation::Linear)?,
            co_dim: co,
            ti_dim: ti,
            bins,
            kernel,
            d_model: d,
        })
    }

    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        let bound = 1.0 / (self.bins as f64).sqrt();
        for v in store.values_mut(self.spec_w) {
            *v = rng.range(-bound, bound);
        }
        for v in store.values_mut(self.spec_b) {
            *v = 0.0;
        }
        self.film.init(store, rng);
        self.glu1.init(store, rng);
        self.gru.init(store, rng);
        self.glu2.init(store, rng);
    }

    pub fn new_state(&self) -> GruState {
        GruState::new(&self.gru)
    }

    /// f = conv(|spectrum|): pads the magnitude bins symmetrically to the
    /// kernel length and reduces each filter to one scalar.
    pub fn spectrum_features(&self, store: &WeightStore, mags: &[f64], out: &mut [f64]) {
        debug_assert_eq!(mags.len(), self.bins);
        debug_assert_eq!(out.len(), self.d_model);
        let mut padded = [0.0f64; 256];
        let padded = &mut padded[..self.kernel];
        let lead = (self.kernel - self.bins) / 2;
        padded[lead..lead + self.bins].copy_from_slice(mags);
        let w = store.values(self.spec_w);
        let b = store.values(self.spec_b);
        for i in 0..self.d_model {
            let mut acc = 0.0;
            for t in 0..self.kernel {
                acc += w[i * self.kernel + t] * padded[t];
            }
            out[i] = acc + b[i];
        }
    }

    /// One conditioning step. `g_m` is the modulated vector from the first
    /// recurrent block, `co`/`ti` the normalized control groups, `mags` the
    /// 65 magnitude bins of the current input buffer.
    pub fn step(
        &self,
        store: &WeightStore,
        state: &mut GruState,
        g_m: &[f64],
        mags: &[f64],
        co: &[f64],
        ti: &[f64],
        out: &mut [f64],
    ) {
        debug_assert_eq!(co.len(), self.co_dim);
        debug_assert_eq!(ti.len(), self.ti_dim);
        let d = self.d_model;
        let mut f = [0.0f64; 8];
        self.spectrum_features(store, mags, &mut f[..d]);

        // FiLM on g_m from (p_co || f)
        let mut film_in = [0.0f64; 8];
        film_in[..self.co_dim].copy_from_slice(co);
        film_in[self.co_dim..self.co_dim + d].copy_from_slice(&f[..d]);
        let mut ab = [0.0f64; 8];
        self.film
            .step(store, &film_in[..self.co_dim + d], &mut ab[..2 * d]);
        let mut k_f = [0.0f64; 8];
        for i in 0..d {
            k_f[i] = ab[i] * g_m[i] + ab[d + i];
        }

        // first GLU
        let mut g1 = [0.0f64; 8];
        self.glu1.step(store, &k_f[..d], &mut g1[..2 * d]);
        let mut k_g = [0.0f64; 8];
        for i in 0..d {
            k_g[i] = g1[i] * softsign(g1[d + i]);
        }

        // Temporal FiLM: GRU over (p_ti || f) emits (c, d) each step
        let mut gru_in = [0.0f64; 8];
        gru_in[..self.ti_dim].copy_from_slice(ti);
        gru_in[self.ti_dim..self.ti_dim + d].copy_from_slice(&f[..d]);
        let mut cd = [0.0f64; 8];
        self.gru.step(
            store,
            state,
            &gru_in[..self.ti_dim + d],
            &mut cd[..self.gru.hidden],
        );
        let mut k_nf = [0.0f64; 8];
        for i in 0..d {
            k_nf[i] = cd[i] * k_g[i] + cd[d + i];
        }

        // second GLU
        let mut g2 = [0.0f64; 8];
        self.glu2.step(store, &k_nf[..d], &mut g2[..2 * d]);
        for i in 0..d {
            out[i] = g2[i] * softsign(g2[d + i]);
        }
    }

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> ConditioningNodes {
        ConditioningNodes {
            spec_w: tape.param(store, self.spec_w),
            spec_b: tape.param(store, self.spec_b),
            film: self.film.nodes(tape, store),
            glu1: self.glu1.nodes(tape, store),
            gru: self.gru.nodes(tape, store),
            glu2: self.glu2.nodes(tape, store),
        }
    }

    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &ConditioningNodes,
        state: &GruStateNodes,
        g_m: NodeId,
        mags: &[f64],
        co: &[f64],
        ti: &[f64],
    ) -> (NodeId, GruStateNodes) {
        let d = self.d_model;
        let mut padded = vec![0.0; self.kernel];
        let lead = (self.kernel - self.bins) / 2;
        padded[lead..lead + self.bins].copy_from_slice(mags);
        let pad_node = tape.constant(&padded);
        let f_mv = tape.matvec(nodes.spec_w, pad_node, d, self.kernel);
        let f = tape.add(f_mv, nodes.spec_b);

        let co_node = tape.constant(co);
        let film_in = tape.concat2(co_node, f);
        let ab = self.film.step_tape(tape, &nodes.film, film_in);
        let a = tape.slice(ab, 0, d);
        let b = tape.slice(ab, d, d);
        let ag = tape.mul(a, g_m);
        let k_f = tape.add(ag, b);

        let g1 = self.glu1.step_tape(tape, &nodes.glu1, k_f);
        let g1a = tape.slice(g1, 0, d);
        let g1b = tape.slice(g1, d, d);
        let g1s = tape.softsign(g1b);
        let k_g = tape.mul(g1a, g1s);

        let gru_in = if self.ti_dim > 0 {
            let ti_node = tape.constant(ti);
            tape.concat2(ti_node, f)
        } else {
            f
        };
        let (cd, gru_next) = self.gru.step_tape(tape, &nodes.gru, state, gru_in);
        let c = tape.slice(cd, 0, d);
        let dmod = tape.slice(cd, d, d);
        let ck = tape.mul(c, k_g);
        let k_nf = tape.add(ck, dmod);

        let g2 = self.glu2.step_tape(tape, &nodes.glu2, k_nf);
        let g2a = tape.slice(g2, 0, d);
        let g2b = tape.slice(g2, d, d);
        let g2s = tape.softsign(g2b);
        let out = tape.mul(g2a, g2s);
        (out, gru_next)
    }
}
