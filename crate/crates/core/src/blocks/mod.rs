//! Composite units: the gated S6 block, its S4D / encoder-decoder / LSTM
//! alternatives behind one Tensor[2] -> Tensor[2] interface, and the
//! FiLM + GLU + Temporal-FiLM conditioning block.

mod conditioning;
mod controls;
mod recurrent;

pub use conditioning::{ConditioningNodes, ConditioningParams};
pub use controls::ControlParams;
pub use recurrent::{BlockNodes, BlockParams, BlockPrepared, BlockState, BlockStateNodes};
