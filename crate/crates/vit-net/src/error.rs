use crate::hooks::ComponentKind;
use tensor_core::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("input shape {actual:?} does not match config shape {expected:?}")]
    InputShape {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("cache was produced by a different model instance (cache id {cache_id}, model id {model_id})")]
    StaleCache { cache_id: u64, model_id: u64 },
    #[error("hook changed the shape of the {kind:?} gradient in block {block}: {expected:?} -> {actual:?}")]
    HookShape {
        kind: ComponentKind,
        block: usize,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, NetError>;
