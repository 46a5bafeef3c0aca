//! Reverse-mode automatic differentiation over a recorded operation tape.
//!
//! Nodes are small real vectors. Values are computed eagerly as ops are
//! pushed, so the tape doubles as a forward evaluator; `backward` replays the
//! record in reverse and accumulates exact gradients. Parameters enter
//! through [`Tape::param`] leaves that reference slots of a
//! [`WeightStore`](crate::model::WeightStore); their gradients land in a flat
//! buffer aligned with the store so an optimizer can consume them directly.
//!
//! The forward math here must stay bit-identical to the streaming inference
//! path: both use the same scalar kernels and the same accumulation order.

use crate::error::{Error, Result};
use crate::kernels::{gelu, gelu_tanh_arg, gelu_tanh_arg_d, sigmoid, softplus, softsign};
use crate::model::{ParamId, WeightStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(u32);

impl NodeId {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    off: u32,
    len: u32,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const,
    Param { off: u32 },
    MatVec { w: NodeId, x: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Div { a: NodeId, b: NodeId },
    AddConst { x: NodeId },
    Scale { x: NodeId, c: f64 },
    MulScalar { x: NodeId, s: NodeId },
    Concat2 { a: NodeId, b: NodeId },
    Slice { x: NodeId, start: u32 },
    RepeatEach { x: NodeId },
    Tile { x: NodeId },
    SumPerChan { x: NodeId, group: u32 },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    Softsign { x: NodeId },
    Gelu { x: NodeId },
    Softplus { x: NodeId },
    Exp { x: NodeId },
    Cos { x: NodeId },
    Sin { x: NodeId },
    Dot { a: NodeId, b: NodeId },
    ConvStep { kernel: NodeId, bias: NodeId, at: u32, k: u32 },
    MseMany { at: u32, tgt_at: u32, count: u32 },
}

/// Recorded computation. Reusable: `reset` keeps allocated capacity.
#[derive(Debug, Default)]
pub struct Tape {
    ops: Vec<Op>,
    spans: Vec<Span>,
    vals: Vec<f64>,
    grads: Vec<f64>,
    aux_ids: Vec<NodeId>,
    aux_f64: Vec<f64>,
    pgrad: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Clears the recording and sizes the parameter-gradient buffer for a
    /// store holding `store_len` scalars.
    pub fn reset(&mut self, store_len: usize) {
        self.ops.clear();
        self.spans.clear();
        self.vals.clear();
        self.grads.clear();
        self.aux_ids.clear();
        self.aux_f64.clear();
        self.pgrad.clear();
        self.pgrad.resize(store_len, 0.0);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn val(&self, id: NodeId) -> &[f64] {
        let s = self.spans[id.idx()];
        &self.vals[s.off as usize..(s.off + s.len) as usize]
    }

    /// Gradient of the loss w.r.t. this node. Valid after `backward`.
    pub fn grad(&self, id: NodeId) -> &[f64] {
        let s = self.spans[id.idx()];
        &self.grads[s.off as usize..(s.off + s.len) as usize]
    }

    /// Gradients for every store scalar, aligned with the store layout.
    pub fn param_grads(&self) -> &[f64] {
        &self.pgrad
    }

    fn push(&mut self, op: Op, len: usize) -> NodeId {
        let off = self.vals.len() as u32;
        self.vals.resize(self.vals.len() + len, 0.0);
        let id = NodeId(self.spans.len() as u32);
        self.spans.push(Span {
            off,
            len: len as u32,
        });
        self.ops.push(op);
        id
    }

    fn out_mut(&mut self, id: NodeId) -> &mut [f64] {
        let s = self.spans[id.idx()];
        &mut self.vals[s.off as usize..(s.off + s.len) as usize]
    }

    // ---- leaves -----------------------------------------------------------

    pub fn constant(&mut self, v: &[f64]) -> NodeId {
        let id = self.push(Op::Const, v.len());
        self.out_mut(id).copy_from_slice(v);
        id
    }

    pub fn scalar(&mut self, v: f64) -> NodeId {
        self.constant(&[v])
    }

    pub fn param(&mut self, store: &WeightStore, pid: ParamId) -> NodeId {
        let (off, len) = store.span(pid);
        debug_assert!(off + len <= self.pgrad.len(), "tape not reset for store");
        let id = self.push(Op::Param { off: off as u32 }, len);
        let v = store.values(pid).to_vec();
        self.out_mut(id).copy_from_slice(&v);
        id
    }

    // ---- linear and structural ops ----------------------------------------

    /// y_i = sum_j W[i*n + j] * x[j], ascending j.
    pub fn matvec(&mut self, w: NodeId, x: NodeId, m: usize, n: usize) -> NodeId {
        debug_assert_eq!(self.val(w).len(), m * n);
        debug_assert_eq!(self.val(x).len(), n);
        let id = self.push(Op::MatVec { w, x }, m);
        let (ws, xs) = {
            let s = self.spans[w.idx()];
            let t = self.spans[x.idx()];
            (
                (s.off as usize, s.len as usize),
                (t.off as usize, t.len as usize),
            )
        };
        let out_span = self.spans[id.idx()];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.vals[ws.0 + i * n + j] * self.vals[xs.0 + j];
            }
            self.vals[out_span.off as usize + i] = acc;
        }
        id
    }

    fn binary(&mut self, op: Op, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> NodeId {
        let len = self.val(a).len();
        debug_assert_eq!(len, self.val(b).len());
        let id = self.push(op, len);
        let (sa, sb, so) = (
            self.spans[a.idx()],
            self.spans[b.idx()],
            self.spans[id.idx()],
        );
        for i in 0..len {
            self.vals[so.off as usize + i] = f(
                self.vals[sa.off as usize + i],
                self.vals[sb.off as usize + i],
            );
        }
        id
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Add { a, b }, a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Sub { a, b }, a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Mul { a, b }, a, b, |x, y| x * y)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Div { a, b }, a, b, |x, y| x / y)
    }

    pub fn add_const(&mut self, x: NodeId, c: f64) -> NodeId {
        self.unary(Op::AddConst { x }, x, |v| v + c)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        self.unary(Op::Scale { x, c }, x, |v| v * c)
    }

    /// Elementwise product with a length-1 node.
    pub fn mul_scalar(&mut self, x: NodeId, s: NodeId) -> NodeId {
        debug_assert_eq!(self.val(s).len(), 1);
        let sv = self.val(s)[0];
        self.unary(Op::MulScalar { x, s }, x, |v| v * sv)
    }

    pub fn concat2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (la, lb) = (self.val(a).len(), self.val(b).len());
        let id = self.push(Op::Concat2 { a, b }, la + lb);
        let (sa, sb, so) = (
            self.spans[a.idx()],
            self.spans[b.idx()],
            self.spans[id.idx()],
        );
        for i in 0..la {
            self.vals[so.off as usize + i] = self.vals[sa.off as usize + i];
        }
        for i in 0..lb {
            self.vals[so.off as usize + la + i] = self.vals[sb.off as usize + i];
        }
        id
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        debug_assert!(start + len <= self.val(x).len());
        let id = self.push(
            Op::Slice {
                x,
                start: start as u32,
            },
            len,
        );
        let (sx, so) = (self.spans[x.idx()], self.spans[id.idx()]);
        for i in 0..len {
            self.vals[so.off as usize + i] = self.vals[sx.off as usize + start + i];
        }
        id
    }

    /// [x0, x0, .., x1, x1, ..]: each element repeated `times` times.
    pub fn repeat_each(&mut self, x: NodeId, times: usize) -> NodeId {
        let lx = self.val(x).len();
        let id = self.push(Op::RepeatEach { x }, lx * times);
        let (sx, so) = (self.spans[x.idx()], self.spans[id.idx()]);
        for i in 0..lx {
            let v = self.vals[sx.off as usize + i];
            for r in 0..times {
                self.vals[so.off as usize + i * times + r] = v;
            }
        }
        id
    }

    /// [x, x, ..]: whole vector repeated `times` times.
    pub fn tile(&mut self, x: NodeId, times: usize) -> NodeId {
        let lx = self.val(x).len();
        let id = self.push(Op::Tile { x }, lx * times);
        let (sx, so) = (self.spans[x.idx()], self.spans[id.idx()]);
        for r in 0..times {
            for i in 0..lx {
                self.vals[so.off as usize + r * lx + i] = self.vals[sx.off as usize + i];
            }
        }
        id
    }

    /// Sums consecutive groups of `group` elements: out[c] = sum x[c*group..].
    pub fn sum_per_chan(&mut self, x: NodeId, group: usize) -> NodeId {
        let lx = self.val(x).len();
        debug_assert_eq!(lx % group, 0);
        let out_len = lx / group;
        let id = self.push(
            Op::SumPerChan {
                x,
                group: group as u32,
            },
            out_len,
        );
        let (sx, so) = (self.spans[x.idx()], self.spans[id.idx()]);
        for c in 0..out_len {
            let mut acc = 0.0;
            for i in 0..group {
                acc += self.vals[sx.off as usize + c * group + i];
            }
            self.vals[so.off as usize + c] = acc;
        }
        id
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let len = self.val(a).len();
        debug_assert_eq!(len, self.val(b).len());
        let id = self.push(Op::Dot { a, b }, 1);
        let (sa, sb, so) = (
            self.spans[a.idx()],
            self.spans[b.idx()],
            self.spans[id.idx()],
        );
        let mut acc = 0.0;
        for i in 0..len {
            acc += self.vals[sa.off as usize + i] * self.vals[sb.off as usize + i];
        }
        self.vals[so.off as usize] = acc;
        id
    }

    // ---- activations -------------------------------------------------------

    fn unary(&mut self, op: Op, x: NodeId, f: impl Fn(f64) -> f64) -> NodeId {
        let len = self.val(x).len();
        let id = self.push(op, len);
        let (sx, so) = (self.spans[x.idx()], self.spans[id.idx()]);
        for i in 0..len {
            self.vals[so.off as usize + i] = f(self.vals[sx.off as usize + i]);
        }
        id
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Sigmoid { x }, x, sigmoid)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Tanh { x }, x, f64::tanh)
    }

    pub fn softsign(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Softsign { x }, x, softsign)
    }

    pub fn gelu(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Gelu { x }, x, gelu)
    }

    pub fn softplus(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Softplus { x }, x, softplus)
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Exp { x }, x, f64::exp)
    }

    pub fn cos(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Cos { x }, x, f64::cos)
    }

    pub fn sin(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Sin { x }, x, f64::sin)
    }

    /// Swish gate x * sigmoid(beta * x) with a length-1 beta node.
    pub fn swish(&mut self, x: NodeId, beta: NodeId) -> NodeId {
        let bx = self.mul_scalar(x, beta);
        let s = self.sigmoid(bx);
        self.mul(x, s)
    }

    // ---- composite steps ---------------------------------------------------

    /// One step of a depthwise causal convolution. `inputs` are the k channel
    /// vectors oldest-first (FIFO contents then the current input);
    /// `kernel` has layout [channel][tap] with the last tap on the newest
    /// input; `bias` is per channel.
    pub fn conv_step(&mut self, kernel: NodeId, bias: NodeId, inputs: &[NodeId]) -> NodeId {
        let k = inputs.len();
        let ch = self.val(bias).len();
        debug_assert_eq!(self.val(kernel).len(), ch * k);
        for &inp in inputs {
            debug_assert_eq!(self.val(inp).len(), ch);
        }
        let at = self.aux_ids.len() as u32;
        self.aux_ids.extend_from_slice(inputs);
        let id = self.push(
            Op::ConvStep {
                kernel,
                bias,
                at,
                k: k as u32,
            },
            ch,
        );
        let sk = self.spans[kernel.idx()].off as usize;
        let sb = self.spans[bias.idx()].off as usize;
        let so = self.spans[id.idx()].off as usize;
        for c in 0..ch {
            let mut acc = self.vals[sb + c];
            for (t, inp) in inputs.iter().enumerate() {
                let si = self.spans[inp.idx()].off as usize;
                acc += self.vals[sk + c * k + t] * self.vals[si + c];
            }
            self.vals[so + c] = acc;
        }
        id
    }

    /// Scalar mean squared error over (prediction node, target) pairs. Every
    /// prediction must be a length-1 node.
    pub fn mse_many(&mut self, preds: &[NodeId], targets: &[f64]) -> NodeId {
        debug_assert_eq!(preds.len(), targets.len());
        debug_assert!(!preds.is_empty());
        let at = self.aux_ids.len() as u32;
        self.aux_ids.extend_from_slice(preds);
        let tgt_at = self.aux_f64.len() as u32;
        self.aux_f64.extend_from_slice(targets);
        let id = self.push(
            Op::MseMany {
                at,
                tgt_at,
                count: preds.len() as u32,
            },
            1,
        );
        let mut acc = 0.0;
        for (i, p) in preds.iter().enumerate() {
            debug_assert_eq!(self.spans[p.idx()].len, 1);
            let d = self.vals[self.spans[p.idx()].off as usize] - self.aux_f64[tgt_at as usize + i];
            acc += d * d;
        }
        let so = self.spans[id.idx()].off as usize;
        self.vals[so] = acc / preds.len() as f64;
        id
    }

    // ---- backward ----------------------------------------------------------

    /// Reverse sweep from a scalar loss node. Node gradients are readable via
    /// `grad`, parameter gradients via `param_grads`.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.val(loss).len() != 1 {
            return Err(Error::Shape(format!(
                "loss node must be scalar, has length {}",
                self.val(loss).len()
            )));
        }
        self.grads.clear();
        self.grads.resize(self.vals.len(), 0.0);
        for g in self.pgrad.iter_mut() {
            *g = 0.0;
        }
        let ls = self.spans[loss.idx()];
        self.grads[ls.off as usize] = 1.0;

        for idx in (0..self.ops.len()).rev() {
            let op = self.ops[idx];
            let so = self.spans[idx];
            let (go, glen) = (so.off as usize, so.len as usize);
            match op {
                Op::Const => {}
                Op::Param { off } => {
                    for i in 0..glen {
                        self.pgrad[off as usize + i] += self.grads[go + i];
                    }
                }
                Op::MatVec { w, x } => {
                    let (sw, sx) = (self.spans[w.idx()], self.spans[x.idx()]);
                    let n = sx.len as usize;
                    let m = glen;
                    for i in 0..m {
                        let gi = self.grads[go + i];
                        if gi == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            self.grads[sw.off as usize + i * n + j] +=
                                gi * self.vals[sx.off as usize + j];
                            self.grads[sx.off as usize + j] +=
                                gi * self.vals[sw.off as usize + i * n + j];
                        }
                    }
                }
                Op::Add { a, b } => {
                    let (sa, sb) = (self.spans[a.idx()], self.spans[b.idx()]);
                    for i in 0..glen {
                        let g = self.grads[go + i];
                        self.grads[sa.off as usize + i] += g;
                        self.grads[sb.off as usize + i] += g;
                    }
                }
                Op::Sub { a, b } => {
                    let (sa, sb) = (self.spans[a.idx()], self.spans[b.idx()]);
                    for i in 0..glen {
                        let g = self.grads[go + i];
                        self.grads[sa.off as usize + i] += g;
                        self.grads[sb.off as usize + i] -= g;
                    }
                }
                Op::Mul { a, b } => {
                    let (sa, sb) = (self.spans[a.idx()], self.spans[b.idx()]);
                    for i in 0..glen {
                        let g = self.grads[go + i];
                        self.grads[sa.off as usize + i] += g * self.vals[sb.off as usize + i];
                        self.grads[sb.off as usize + i] += g * self.vals[sa.off as usize + i];
                    }
                }
                Op::Div { a, b } => {
                    let (sa, sb) = (self.spans[a.idx()], self.spans[b.idx()]);
                    for i in 0..glen {
                        let g = self.grads[go + i];
                        let bv = self.vals[sb.off as usize + i];
                        let av = self.vals[sa.off as usize + i];
                        self.grads[sa.off as usize + i] += g / bv;
                        self.grads[sb.off as usize + i] -= g * av / (bv * bv);
                    }
                }
                Op::AddConst { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + i] += self.grads[go + i];
                    }
                }
                Op::Scale { x, c } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + i] += self.grads[go + i] * c;
                    }
                }
                Op::MulScalar { x, s } => {
                    let (sx, ss) = (self.spans[x.idx()], self.spans[s.idx()]);
                    let sv = self.vals[ss.off as usize];
                    let mut gs = 0.0;
                    for i in 0..glen {
                        let g = self.grads[go + i];
                        self.grads[sx.off as usize + i] += g * sv;
                        gs += g * self.vals[sx.off as usize + i];
                    }
                    self.grads[ss.off as usize] += gs;
                }
                Op::Concat2 { a, b } => {
                    let (sa, sb) = (self.spans[a.idx()], self.spans[b.idx()]);
                    let la = sa.len as usize;
                    for i in 0..la {
                        self.grads[sa.off as usize + i] += self.grads[go + i];
                    }
                    for i in 0..sb.len as usize {
                        self.grads[sb.off as usize + i] += self.grads[go + la + i];
                    }
                }
                Op::Slice { x, start } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + start as usize + i] += self.grads[go + i];
                    }
                }
                Op::RepeatEach { x } => {
                    let sx = self.spans[x.idx()];
                    let times = glen / sx.len as usize;
                    for i in 0..sx.len as usize {
                        let mut acc = 0.0;
                        for r in 0..times {
                            acc += self.grads[go + i * times + r];
                        }
                        self.grads[sx.off as usize + i] += acc;
                    }
                }
                Op::Tile { x } => {
                    let sx = self.spans[x.idx()];
                    let lx = sx.len as usize;
                    let times = glen / lx;
                    for r in 0..times {
                        for i in 0..lx {
                            self.grads[sx.off as usize + i] += self.grads[go + r * lx + i];
                        }
                    }
                }
                Op::SumPerChan { x, group } => {
                    let sx = self.spans[x.idx()];
                    for c in 0..glen {
                        let g = self.grads[go + c];
                        for i in 0..group as usize {
                            self.grads[sx.off as usize + c * group as usize + i] += g;
                        }
                    }
                }
                Op::Sigmoid { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        let y = self.vals[go + i];
                        self.grads[sx.off as usize + i] += self.grads[go + i] * y * (1.0 - y);
                    }
                }
                Op::Tanh { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        let y = self.vals[go + i];
                        self.grads[sx.off as usize + i] += self.grads[go + i] * (1.0 - y * y);
                    }
                }
                Op::Softsign { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        let d = 1.0 + self.vals[sx.off as usize + i].abs();
                        self.grads[sx.off as usize + i] += self.grads[go + i] / (d * d);
                    }
                }
                Op::Gelu { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        let v = self.vals[sx.off as usize + i];
                        let t = gelu_tanh_arg(v).tanh();
                        let d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * gelu_tanh_arg_d(v);
                        self.grads[sx.off as usize + i] += self.grads[go + i] * d;
                    }
                }
                Op::Softplus { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + i] +=
                            self.grads[go + i] * sigmoid(self.vals[sx.off as usize + i]);
                    }
                }
                Op::Exp { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + i] += self.grads[go + i] * self.vals[go + i];
                    }
                }
                Op::Cos { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + i] -=
                            self.grads[go + i] * self.vals[sx.off as usize + i].sin();
                    }
                }
                Op::Sin { x } => {
                    let sx = self.spans[x.idx()];
                    for i in 0..glen {
                        self.grads[sx.off as usize + i] +=
                            self.grads[go + i] * self.vals[sx.off as usize + i].cos();
                    }
                }
                Op::Dot { a, b } => {
                    let (sa, sb) = (self.spans[a.idx()], self.spans[b.idx()]);
                    let g = self.grads[go];
                    for i in 0..sa.len as usize {
                        self.grads[sa.off as usize + i] += g * self.vals[sb.off as usize + i];
                        self.grads[sb.off as usize + i] += g * self.vals[sa.off as usize + i];
                    }
                }
                Op::ConvStep { kernel, bias, at, k } => {
                    let (sk, sb) = (self.spans[kernel.idx()], self.spans[bias.idx()]);
                    let k = k as usize;
                    for c in 0..glen {
                        let g = self.grads[go + c];
                        self.grads[sb.off as usize + c] += g;
                        for t in 0..k {
                            let inp = self.aux_ids[at as usize + t];
                            let si = self.spans[inp.idx()];
                            self.grads[sk.off as usize + c * k + t] +=
                                g * self.vals[si.off as usize + c];
                            self.grads[si.off as usize + c] +=
                                g * self.vals[sk.off as usize + c * k + t];
                        }
                    }
                }
                Op::MseMany { at, tgt_at, count } => {
                    let g = self.grads[go];
                    let inv = 1.0 / count as f64;
                    for i in 0..count as usize {
                        let p = self.aux_ids[at as usize + i];
                        let sp = self.spans[p.idx()];
                        let d = self.vals[sp.off as usize] - self.aux_f64[tgt_at as usize + i];
                        self.grads[sp.off as usize] += g * 2.0 * d * inv;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Central finite-difference gradients of `f` w.r.t. every store scalar.
/// Test utility: independent of the tape's backward sweep.
pub fn finite_difference_grads(
    store: &mut WeightStore,
    h: f64,
    mut f: impl FnMut(&WeightStore) -> f64,
) -> Vec<f64> {
    let n = store.len();
    let mut grads = vec![0.0; n];
    for i in 0..n {
        let orig = store.flat()[i];
        store.flat_mut()[i] = orig + h;
        let up = f(store);
        store.flat_mut()[i] = orig - h;
        let down = f(store);
        store.flat_mut()[i] = orig;
        grads[i] = (up - down) / (2.0 * h);
    }
    grads
}

/// Pass criterion used by every gradient check: relative error below `tol`
/// with a small absolute floor for near-zero gradients.
pub fn grads_close(analytic: &[f64], numeric: &[f64], tol: f64) -> std::result::Result<(), String> {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let denom = a.abs().max(n.abs());
        let err = (a - n).abs();
        if err > tol * denom + 1e-8 {
            return Err(format!(
                "grad {i}: analytic {a:.12e} vs numeric {n:.12e} (rel {:.3e})",
                err / denom.max(1e-300)
            ));
        }
    }
    Ok(())
}
