//! Fully connected layer with an activation tag.

use crate::error::Result;
use crate::kernels::{gelu, softsign, swish, Rng};
use crate::layers::init_uniform_fan_in;
use crate::model::{ParamId, WeightStore};
use crate::tape::{NodeId, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Gelu,
    Swish,
    Softsign,
}

#[derive(Debug, Clone)]
pub struct DenseParams {
    pub w: ParamId,
    pub b: ParamId,
    /// Learnable swish sharpness, allocated only for `Activation::Swish`.
    pub beta: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
    pub act: Activation,
}

/// Parameter leaves, pushed once per tape and shared by all steps.
#[derive(Debug, Clone, Copy)]
pub struct DenseNodes {
    pub w: NodeId,
    pub b: NodeId,
    pub beta: Option<NodeId>,
}

impl DenseParams {
    pub fn declare(
        store: &mut WeightStore,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        act: Activation,
    ) -> Result<Self> {
        let w = store.declare(&format!("{prefix}.w"), &[out_dim, in_dim])?;
        let b = store.declare(&format!("{prefix}.b"), &[out_dim])?;
        let beta = if act == Activation::Swish {
            Some(store.declare(&format!("{prefix}.beta"), &[1])?)
        } else {
            None
        };
        Ok(DenseParams {
            w,
            b,
            beta,
            in_dim,
            out_dim,
            act,
        })
    }

    pub fn init(&self, store: &mut WeightStore, rng: &mut Rng) {
        init_uniform_fan_in(store.values_mut(self.w), self.in_dim, rng);
        for v in store.values_mut(self.b) {
            *v = 0.0;
        }
        if let Some(beta) = self.beta {
            store.values_mut(beta)[0] = 1.0;
        }
    }

    /// activation(W x + b)
    pub fn step(&self, store: &WeightStore, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        let w = store.values(self.w);
        let b = store.values(self.b);
        for i in 0..self.out_dim {
            let mut acc = 0.0;
            for j in 0..self.in_dim {
                acc += w[i * self.in_dim + j] * x[j];
            }
            out[i] = acc + b[i];
        }
        match self.act {
            Activation::Linear => {}
            Activation::Gelu => {
                for v in out.iter_mut() {
                    *v = gelu(*v);
                }
            }
            Activation::Softsign => {
                for v in out.iter_mut() {
                    *v = softsign(*v);
                }
            }
            Activation::Swish => {
                let beta = store.values(self.beta.expect("swish dense has beta"))[0];
                for v in out.iter_mut() {
                    *v = swish(*v, beta);
                }
            }
        }
    }

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> DenseNodes {
        DenseNodes {
            w: tape.param(store, self.w),
            b: tape.param(store, self.b),
            beta: self.beta.map(|beta| tape.param(store, beta)),
        }
    }

    pub fn step_tape(&self, tape: &mut Tape, nodes: &DenseNodes, x: NodeId) -> NodeId {
        let mv = tape.matvec(nodes.w, x, self.out_dim, self.in_dim);
        let pre = tape.add(mv, nodes.b);
        match self.act {
            Activation::Linear => pre,
            Activation::Gelu => tape.gelu(pre),
            Activation::Softsign => tape.softsign(pre),
            Activation::Swish => tape.swish(pre, nodes.beta.expect("swish dense has beta")),
        }
    }
}
