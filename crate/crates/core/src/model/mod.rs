//! End-to-end model assembly: configuration, the named/versioned weight
//! store and its file format, streaming state and per-sample inference, and
//! parameter/FLOP accounting.

mod config;
pub mod cost;
mod stream;
mod weights;

pub use config::{Arch, Device, ModelConfig};
pub use cost::{conditioning_reference_flops, count_flops, count_params, reference_costs, CostLine, CostReport};
pub use stream::{build_model, Model, ModelNodes, ModelState, ModelStateNodes, StreamState};
pub use weights::{load_weights, save_weights, ParamId, WeightStore, WEIGHT_FORMAT_VERSION};

#[cfg(test)]
pub(crate) use weights::test_store;
