//! The recurrent block variants. All map a d_model vector to a d_model
//! vector per step and end in a GELU FC, so they are interchangeable inside
//! the model skeleton.
//!
//! - s6: in-FC doubling to 2*d_inner, split; one half through causal conv,
//!   swish and the S6 layer; gated by swish of the other half; GELU FC out.
//! - s4d: in-FC to d_inner, S4D layer, GELU FC out.
//! - lstm: LSTM layer, GELU FC out.
//! - ed: two stacked LSTMs and a GELU FC; in the pre-conditioning position a
//!   conv encoder over the recent block inputs rewrites the first LSTM's
//!   state every step, otherwise that LSTM carries its own state.

use crate::error::Result;
use crate::kernels::{swish, Rng};
use crate::layers::{
    Activation, CausalConvParams, ConvNodes, ConvState, ConvStateNodes, DenseNodes, DenseParams,
    LstmNodes, LstmParams, LstmState, LstmStateNodes, S4dDisc, S4dDiscNodes, S4dParams, S4dState,
    S4dStateNodes, S6ParamNodes, S6Params, S6State, S6StateNodes,
};
use crate::model::{Arch, ModelConfig, ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone)]
pub struct S6Block {
    pub in_proj: DenseParams,
    pub conv: CausalConvParams,
    pub beta_conv: ParamId,
    pub ssm: S6Params,
    pub beta_res: ParamId,
    pub out_proj: DenseParams,
    d_inner: usize,
}

#[derive(Debug, Clone)]
pub struct S4dBlock {
    pub in_proj: DenseParams,
    pub ssm: S4dParams,
    pub out_proj: DenseParams,
}

#[derive(Debug, Clone)]
pub struct LstmBlock {
    pub lstm: LstmParams,
    pub out_proj: DenseParams,
}

#[derive(Debug, Clone)]
pub struct EdBlock {
    /// Conv encoder over the last `k` block inputs, flattened; present only
    /// in the pre-conditioning block. Emits [h0 || c0] for the first LSTM.
    pub encoder: Option<DenseParams>,
    pub lstm1: LstmParams,
    pub lstm2: LstmParams,
    pub out_proj: DenseParams,
    encoder_k: usize,
    d_model: usize,
}

#[derive(Debug, Clone)]
pub enum BlockParams {
    S6(S6Block),
    S4d(S4dBlock),
    Ed(EdBlock),
    Lstm(LstmBlock),
}

#[derive(Debug, Clone)]
pub enum BlockState {
    S6 { conv: ConvState, ssm: S6State },
    S4d(S4dState),
    Ed {
        fifo: Vec<f64>,
        lstm1: LstmState,
        lstm2: LstmState,
    },
    Lstm(LstmState),
}

impl BlockState {
    pub fn reset(&mut self) {
        match self {
            BlockState::S6 { conv, ssm } => {
                conv.reset();
                ssm.reset();
            }
            BlockState::S4d(s) => s.reset(),
            BlockState::Ed { fifo, lstm1, lstm2 } => {
                fifo.iter_mut().for_each(|v| *v = 0.0);
                lstm1.reset();
                lstm2.reset();
            }
            BlockState::Lstm(s) => s.reset(),
        }
    }

    /// Flattened state, used to pin that its size is constant over time.
    pub fn flatten(&self, out: &mut Vec<f64>) {
        match self {
            BlockState::S6 { conv, ssm } => {
                out.extend_from_slice(conv.flat());
                out.extend_from_slice(&ssm.h);
            }
            BlockState::S4d(s) => {
                out.extend_from_slice(&s.h_re);
                out.extend_from_slice(&s.h_im);
            }
            BlockState::Ed { fifo, lstm1, lstm2 } => {
                out.extend_from_slice(fifo);
                out.extend_from_slice(&lstm1.h);
                out.extend_from_slice(&lstm1.c);
                out.extend_from_slice(&lstm2.h);
                out.extend_from_slice(&lstm2.c);
            }
            BlockState::Lstm(s) => {
                out.extend_from_slice(&s.h);
                out.extend_from_slice(&s.c);
            }
        }
    }
}

/// Input-independent precomputation for streaming (the S4D discretization).
#[derive(Debug, Clone)]
pub enum BlockPrepared {
    Plain,
    S4d(S4dDisc),
}

#[derive(Debug, Clone)]
pub enum BlockNodes {
    S6 {
        in_proj: DenseNodes,
        conv: ConvNodes,
        beta_conv: NodeId,
        ssm: S6ParamNodes,
        beta_res: NodeId,
        out_proj: DenseNodes,
    },
    S4d {
        in_proj: DenseNodes,
        ssm: S4dDiscNodes,
        out_proj: DenseNodes,
    },
    Ed {
        encoder: Option<DenseNodes>,
        lstm1: LstmNodes,
        lstm2: LstmNodes,
        out_proj: DenseNodes,
    },
    Lstm {
        lstm: LstmNodes,
        out_proj: DenseNodes,
    },
}

#[derive(Debug, Clone)]
pub enum BlockStateNodes {
    S6 {
        conv: ConvStateNodes,
        ssm: S6StateNodes,
    },
    S4d(S4dStateNodes),
    Ed {
        fifo: Vec<NodeId>,
        lstm1: LstmStateNodes,
        lstm2: LstmStateNodes,
    },
    Lstm(LstmStateNodes),
}

impl BlockParams {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        cfg: &ModelConfig,
        pre_conditioning: bool,
    ) -> Result<Self> {
        let d = cfg.d_model;
        match cfg.arch {
            Arch::S6 => Ok(BlockParams::S6(S6Block {
                in_proj: DenseParams::declare(
                    store,
                    &format!("{prefix}.in_proj"),
                    d,
                    2 * cfg.d_inner,
                    Activation::Linear,
                )?,
                conv: CausalConvParams::declare(
                    store,
                    &format!("{prefix}.conv"),
                    cfg.d_inner,
                    cfg.conv_kernel,
                )?,
                beta_conv: store.declare(&format!("{prefix}.swish_conv.beta"), &[1])?,
                ssm: S6Params::declare(store, &format!("{prefix}.ssm"), cfg.d_inner, cfg.ssm_state)?,
                beta_res: store.declare(&format!("{prefix}.swish_res.beta"), &[1])?,
                out_proj: DenseParams::declare(
                    store,
                    &format!("{prefix}.out_proj"),
                    cfg.d_inner,
                    d,
                    Activation::Gelu,
                )?,
                d_inner: cfg.d_inner,
            })),
            Arch::S4d => Ok(BlockParams::S4d(S4dBlock {
                in_proj: DenseParams::declare(
                    store,
                    &format!("{prefix}.in_proj"),
                    d,
                    cfg.d_inner,
                    Activation::Linear,
                )?,
                ssm: S4dParams::declare(store, &format!("{prefix}.ssm"), cfg.d_inner, cfg.ssm_state)?,
                out_proj: DenseParams::declare(
                    store,
                    &format!("{prefix}.out_proj"),
                    cfg.d_inner,
                    d,
                    Activation::Gelu,
                )?,
            })),
            Arch::Ed => {
                let h = cfg.ed_hidden;
                let k = cfg.ed_encoder_kernel;
                let encoder = if pre_conditioning {
                    Some(DenseParams::declare(
                        store,
                        &format!("{prefix}.encoder"),
                        k * d,
                        2 * h,
                        Activation::Linear,
                    )?)
                } else {
                    None
                };
                Ok(BlockParams::Ed(EdBlock {
                    encoder,
                    lstm1: LstmParams::declare(store, &format!("{prefix}.lstm1"), d, h)?,
                    lstm2: LstmParams::declare(store, &format!("{prefix}.lstm2"), h, h)?,
                    out_proj: DenseParams::declare(
                        store,
                        &format!("{prefix}.out_proj"),
                        h,
                        d,
                        Activation::Gelu,
                    )?,
                    encoder_k: k,
                    d_model: d,
                }))
            }
            Arch::Lstm => Ok(BlockParams::Lstm(LstmBlock {
                lstm: LstmParams::declare(store, &format!("{prefix}.lstm"), d, cfg.lstm_hidden)?,
                out_proj: DenseParams::declare(
                    store,
                    &format!("{prefix}.out_proj"),
                    cfg.lstm_hidden,
                    d,
                    Activation::Gelu,
                )?,
            })),
        }
    }

    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        match self {
            BlockParams::S6(b) => {
                b.in_proj.init(store, rng);
                b.conv.init(store, rng);
                store.values_mut(b.beta_conv)[0] = 1.0;
                b.ssm.init(store, rng);
                store.values_mut(b.beta_res)[0] = 1.0;
                b.out_proj.init(store, rng);
            }
            BlockParams::S4d(b) => {
                b.in_proj.init(store, rng);
                b.ssm.init(store, rng);
                b.out_proj.init(store, rng);
            }
            BlockParams::Ed(b) => {
                if let Some(enc) = &b.encoder {
                    enc.init(store, rng);
                }
                b.lstm1.init(store, rng);
                b.lstm2.init(store, rng);
                b.out_proj.init(store, rng);
            }
            BlockParams::Lstm(b) => {
                b.lstm.init(store, rng);
                b.out_proj.init(store, rng);
            }
        }
    }

    pub fn new_state(&self) -> BlockState {
        match self {
            BlockParams::S6(b) => BlockState::S6 {
                conv: ConvState::new(&b.conv),
                ssm: S6State::new(&b.ssm),
            },
            BlockParams::S4d(b) => BlockState::S4d(S4dState::new(&b.ssm)),
            BlockParams::Ed(b) => BlockState::Ed {
                fifo: vec![0.0; b.encoder_k * b.d_model],
                lstm1: LstmState::new(&b.lstm1),
                lstm2: LstmState::new(&b.lstm2),
            },
            BlockParams::Lstm(b) => BlockState::Lstm(LstmState::new(&b.lstm)),
        }
    }

    pub fn prepare(&self, store: &WeightStore) -> Result<BlockPrepared> {
        match self {
            BlockParams::S4d(b) => Ok(BlockPrepared::S4d(b.ssm.discretize(store)?)),
            _ => Ok(BlockPrepared::Plain),
        }
    }

    pub fn step(
        &self,
        store: &WeightStore,
        prepared: &BlockPrepared,
        state: &mut BlockState,
        u: &[f64],
        out: &mut [f64],
    ) {
        match (self, state) {
            (BlockParams::S6(b), BlockState::S6 { conv, ssm }) => {
                let di = b.d_inner;
                debug_assert!(di <= 8);
                let mut proj = [0.0f64; 16];
                let proj = &mut proj[..2 * di];
                b.in_proj.step(store, u, proj);
                let beta_conv = store.values(b.beta_conv)[0];
                let beta_res = store.values(b.beta_res)[0];
                let mut s_conv = [0.0f64; 8];
                {
                    let (s_p, _) = proj.split_at(di);
                    b.conv.step(store, conv, s_p, &mut s_conv[..di]);
                }
                let mut gated = [0.0f64; 8];
                for i in 0..di {
                    gated[i] = swish(s_conv[i], beta_conv);
                }
                let mut s_ssm = [0.0f64; 8];
                b.ssm.step(store, ssm, &gated[..di], &mut s_ssm[..di]);
                let mut s_s = [0.0f64; 8];
                for i in 0..di {
                    let gate = swish(proj[di + i], beta_res);
                    s_s[i] = s_ssm[i] * gate;
                }
                b.out_proj.step(store, &s_s[..di], out);
            }
            (BlockParams::S4d(b), BlockState::S4d(ssm)) => {
                let disc = match prepared {
                    BlockPrepared::S4d(d) => d,
                    BlockPrepared::Plain => panic!("s4d block stepped without discretization"),
                };
                let di = b.ssm.channels;
                let mut inner = [0.0f64; 8];
                b.in_proj.step(store, u, &mut inner[..di]);
                let mut s_ssm = [0.0f64; 8];
                b.ssm.step(store, disc, ssm, &inner[..di], &mut s_ssm[..di]);
                b.out_proj.step(store, &s_ssm[..di], out);
            }
            (BlockParams::Ed(b), BlockState::Ed { fifo, lstm1, lstm2 }) => {
                let d = b.d_model;
                // current input enters the history first
                fifo.copy_within(d.., 0);
                let tail = fifo.len() - d;
                fifo[tail..].copy_from_slice(u);
                if let Some(enc) = &b.encoder {
                    let h = b.lstm1.hidden;
                    debug_assert!(2 * h <= 16);
                    let mut enc_out = [0.0f64; 16];
                    enc.step(store, fifo, &mut enc_out[..2 * h]);
                    lstm1.h.copy_from_slice(&enc_out[..h]);
                    lstm1.c.copy_from_slice(&enc_out[h..2 * h]);
                }
                let mut h1 = [0.0f64; 8];
                b.lstm1.step(store, lstm1, u, &mut h1[..b.lstm1.hidden]);
                let mut h2 = [0.0f64; 8];
                b.lstm2
                    .step(store, lstm2, &h1[..b.lstm1.hidden], &mut h2[..b.lstm2.hidden]);
                b.out_proj.step(store, &h2[..b.lstm2.hidden], out);
            }
            (BlockParams::Lstm(b), BlockState::Lstm(lstm)) => {
                let mut h = [0.0f64; 8];
                b.lstm.step(store, lstm, u, &mut h[..b.lstm.hidden]);
                b.out_proj.step(store, &h[..b.lstm.hidden], out);
            }
            _ => panic!("block state does not match block variant"),
        }
    }

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> BlockNodes {
        match self {
            BlockParams::S6(b) => BlockNodes::S6 {
                in_proj: b.in_proj.nodes(tape, store),
                conv: b.conv.nodes(tape, store),
                beta_conv: tape.param(store, b.beta_conv),
                ssm: b.ssm.param_nodes(tape, store),
                beta_res: tape.param(store, b.beta_res),
                out_proj: b.out_proj.nodes(tape, store),
            },
            BlockParams::S4d(b) => BlockNodes::S4d {
                in_proj: b.in_proj.nodes(tape, store),
                ssm: b.ssm.discretize_tape(tape, store),
                out_proj: b.out_proj.nodes(tape, store),
            },
            BlockParams::Ed(b) => BlockNodes::Ed {
                encoder: b.encoder.as_ref().map(|e| e.nodes(tape, store)),
                lstm1: b.lstm1.nodes(tape, store),
                lstm2: b.lstm2.nodes(tape, store),
                out_proj: b.out_proj.nodes(tape, store),
            },
            BlockParams::Lstm(b) => BlockNodes::Lstm {
                lstm: b.lstm.nodes(tape, store),
                out_proj: b.out_proj.nodes(tape, store),
            },
        }
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &BlockState) -> BlockStateNodes {
        match (self, state) {
            (BlockParams::S6(b), BlockState::S6 { conv, ssm }) => BlockStateNodes::S6 {
                conv: b.conv.state_nodes(tape, conv),
                ssm: b.ssm.state_nodes(tape, ssm),
            },
            (BlockParams::S4d(b), BlockState::S4d(s)) => {
                BlockStateNodes::S4d(b.ssm.state_nodes(tape, s))
            }
            (BlockParams::Ed(b), BlockState::Ed { fifo, lstm1, lstm2 }) => {
                let d = b.d_model;
                let fifo_nodes = (0..b.encoder_k)
                    .map(|t| tape.constant(&fifo[t * d..(t + 1) * d]))
                    .collect();
                BlockStateNodes::Ed {
                    fifo: fifo_nodes,
                    lstm1: b.lstm1.state_nodes(tape, lstm1),
                    lstm2: b.lstm2.state_nodes(tape, lstm2),
                }
            }
            (BlockParams::Lstm(b), BlockState::Lstm(s)) => {
                BlockStateNodes::Lstm(b.lstm.state_nodes(tape, s))
            }
            _ => panic!("block state does not match block variant"),
        }
    }

    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &BlockNodes,
        state: &BlockStateNodes,
        u: NodeId,
    ) -> (NodeId, BlockStateNodes) {
        match (self, nodes, state) {
            (
                BlockParams::S6(b),
                BlockNodes::S6 {
                    in_proj,
                    conv,
                    beta_conv,
                    ssm,
                    beta_res,
                    out_proj,
                },
                BlockStateNodes::S6 {
                    conv: conv_state,
                    ssm: ssm_state,
                },
            ) => {
                let di = b.d_inner;
                let proj = b.in_proj.step_tape(tape, in_proj, u);
                let s_p = tape.slice(proj, 0, di);
                let s_res = tape.slice(proj, di, di);
                let (s_conv, conv_next) = b.conv.step_tape(tape, conv, conv_state, s_p);
                let gated = tape.swish(s_conv, *beta_conv);
                let (s_ssm, ssm_next) = b.ssm.step_tape(tape, ssm, ssm_state, gated);
                let gate = tape.swish(s_res, *beta_res);
                let s_s = tape.mul(s_ssm, gate);
                let out = b.out_proj.step_tape(tape, out_proj, s_s);
                (
                    out,
                    BlockStateNodes::S6 {
                        conv: conv_next,
                        ssm: ssm_next,
                    },
                )
            }
            (
                BlockParams::S4d(b),
                BlockNodes::S4d {
                    in_proj,
                    ssm,
                    out_proj,
                },
                BlockStateNodes::S4d(ssm_state),
            ) => {
                let inner = b.in_proj.step_tape(tape, in_proj, u);
                let (s_ssm, ssm_next) = b.ssm.step_tape(tape, ssm, ssm_state, inner);
                let out = b.out_proj.step_tape(tape, out_proj, s_ssm);
                (out, BlockStateNodes::S4d(ssm_next))
            }
            (
                BlockParams::Ed(b),
                BlockNodes::Ed {
                    encoder,
                    lstm1,
                    lstm2,
                    out_proj,
                },
                BlockStateNodes::Ed {
                    fifo,
                    lstm1: l1_state,
                    lstm2: l2_state,
                },
            ) => {
                let h = b.lstm1.hidden;
                let mut fifo_next: Vec<NodeId> = fifo[1..].to_vec();
                fifo_next.push(u);
                let l1_in_state = if let Some(enc_nodes) = encoder {
                    let enc = b.encoder.as_ref().expect("encoder params");
                    let mut flat = fifo_next[0];
                    for &n in &fifo_next[1..] {
                        flat = tape.concat2(flat, n);
                    }
                    let enc_out = enc.step_tape(tape, enc_nodes, flat);
                    LstmStateNodes {
                        h: tape.slice(enc_out, 0, h),
                        c: tape.slice(enc_out, h, h),
                    }
                } else {
                    *l1_state
                };
                let (h1, l1_next) = b.lstm1.step_tape(tape, lstm1, &l1_in_state, u);
                let (h2, l2_next) = b.lstm2.step_tape(tape, lstm2, &l2_state.clone(), h1);
                let out = b.out_proj.step_tape(tape, out_proj, h2);
                (
                    out,
                    BlockStateNodes::Ed {
                        fifo: fifo_next,
                        lstm1: l1_next,
                        lstm2: l2_next,
                    },
                )
            }
            (
                BlockParams::Lstm(b),
                BlockNodes::Lstm { lstm, out_proj },
                BlockStateNodes::Lstm(l_state),
            ) => {
                let (h, l_next) = b.lstm.step_tape(tape, lstm, l_state, u);
                let out = b.out_proj.step_tape(tape, out_proj, h);
                (out, BlockStateNodes::Lstm(l_next))
            }
            _ => panic!("block nodes/state do not match block variant"),
        }
    }

    /// Copies the updated state values out of the tape back into `state`
    /// (used to carry detached states across training batches).
    pub fn store_state_from_tape(
        &self,
        tape: &Tape,
        nodes: &BlockStateNodes,
        state: &mut BlockState,
    ) {
        match (self, nodes, state) {
            (
                BlockParams::S6(b),
                BlockStateNodes::S6 { conv, ssm },
                BlockState::S6 {
                    conv: conv_state,
                    ssm: ssm_state,
                },
            ) => {
                let ch = b.conv.channels;
                let mut flat = vec![0.0; (b.conv.k - 1) * ch];
                for (t, node) in conv.fifo.iter().enumerate() {
                    flat[t * ch..(t + 1) * ch].copy_from_slice(tape.val(*node));
                }
                conv_state.load_flat(&flat);
                ssm_state.h.copy_from_slice(tape.val(ssm.h));
            }
            (BlockParams::S4d(_), BlockStateNodes::S4d(s), BlockState::S4d(ssm_state)) => {
                ssm_state.h_re.copy_from_slice(tape.val(s.h_re));
                ssm_state.h_im.copy_from_slice(tape.val(s.h_im));
            }
            (
                BlockParams::Ed(b),
                BlockStateNodes::Ed { fifo, lstm1, lstm2 },
                BlockState::Ed {
                    fifo: fifo_state,
                    lstm1: l1,
                    lstm2: l2,
                },
            ) => {
                let d = b.d_model;
                for (t, node) in fifo.iter().enumerate() {
                    fifo_state[t * d..(t + 1) * d].copy_from_slice(tape.val(*node));
                }
                l1.h.copy_from_slice(tape.val(lstm1.h));
                l1.c.copy_from_slice(tape.val(lstm1.c));
                l2.h.copy_from_slice(tape.val(lstm2.h));
                l2.c.copy_from_slice(tape.val(lstm2.c));
            }
            (BlockParams::Lstm(_), BlockStateNodes::Lstm(n), BlockState::Lstm(s)) => {
                s.h.copy_from_slice(tape.val(n.h));
                s.c.copy_from_slice(tape.val(n.c));
            }
            _ => panic!("block nodes/state do not match block variant"),
        }
    }
}
