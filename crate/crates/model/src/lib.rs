//! Per-pixel pressure estimation from RGB: a small fully convolutional
//! network trained as a classifier over log-spaced pressure bins.

pub mod checkpoint;
pub mod conv;
pub mod error;
pub mod estimator;
pub mod net;
pub mod optim;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use error::{ModelError, Result};
pub use estimator::{predict_pressure, PressureEstimator};
pub use net::{
    argmax_labels, cross_entropy, image_tensor, loss, softmax, Grads, ModelConfig, PressureNet, Preset,
};
pub use optim::Adam;
pub use tensor::{Scalar, Tensor};
pub use train::{evaluate_checkpoint, load_dataset, train, train_from, TrainConfig, TrainHistory, TrainOutcome};
