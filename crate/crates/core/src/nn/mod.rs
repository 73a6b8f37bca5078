//! Small fully-connected networks and the gradient-noise tail measurement
//! loop.
//!
//! Parameters live in one flat vector, layer by layer (weights row-major
//! `out x in`, then biases), so a gradient or noise vector can be sliced per
//! layer with [`MlpModel::layer_ranges`].

pub mod data;
pub mod mlp;
pub mod sweep;
pub mod train;

pub use data::{load_mnist_idx, synthetic_blobs, DataPart, DatasetSplit};
pub use mlp::{Init, LossKind, MlpModel};
pub use sweep::{noise_scale_sweep, SweepCell, SweepGrid, SweepRow};
pub use train::{layerwise_alpha, train_with_tail_logging, LayerAlpha, NoisePool, NoiseSource, TrainConfig, TrainLogRow};
