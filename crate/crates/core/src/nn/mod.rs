//! Reverse-mode implementation of the classifier's layers.

pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod head;
pub mod loss;
pub mod lstm;
pub mod network;
pub mod params;
pub mod pool;
pub mod scalar;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{check_gradients, gradcheck_dims, GradCheck};
pub use head::{dense_softmax_head, softmax};
pub use loss::cross_entropy_loss;
pub use network::{backward, forward, loss_and_gradients, predict, Gradients, Network, DROPOUT_RATE};
pub use params::{Moments, Params, PARAM_NAMES};
pub use scalar::{ModelDims, Scalar};
