use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Net(#[from] vit_net::NetError),
    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
    #[error("invalid config: {key}: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("config file line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },
}

impl AttackError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, AttackError>;
