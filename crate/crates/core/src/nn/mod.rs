//! Small dense networks with hand-written backward passes, losses with soft
//! targets, and the Adam optimizer.

mod adam;
pub mod checkpoint;
mod loss;
mod mlp;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::Checkpoint;
pub use loss::{loss_and_grad, loss_full, sigmoid, LossKind, LossOutput};
pub use mlp::{mlp_backward, mlp_forward, Activation, Layer, LayerGrad, MlpCache, MlpGrads, MlpParams};
