use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZooError {
    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
    #[error(transparent)]
    Net(#[from] vit_net::NetError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset file: {0}")]
    Format(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
}

pub type Result<T> = std::result::Result<T, ZooError>;
