//! Dataset generation, dataset files, and training for a small zoo of tiny
//! Vision Transformers.

mod dataset;
mod error;
mod format;
mod train;
mod zoo;

pub use dataset::{generate_synthetic, Dataset, Split};
pub use error::{Result, ZooError};
pub use format::{
    dataset_from_bytes, dataset_to_bytes, load_dataset, save_dataset, DATASET_MAGIC,
    DATASET_VERSION,
};
pub use train::{evaluate, train, Optimizer, TrainConfig, TrainOutput};
pub use zoo::{default_zoo, ZooSpec};
