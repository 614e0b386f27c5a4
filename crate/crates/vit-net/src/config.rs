use crate::error::{NetError, Result};

/// Layer-norm epsilon used everywhere in the network.
pub const LN_EPS: f64 = 1e-5;

/// Architecture of a tiny Vision Transformer.
#[derive(Debug, Clone, PartialEq)]
pub struct ViTConfig {
    /// Image height and width in pixels (square images).
    pub image_size: usize,
    /// Patch side length; must divide `image_size`.
    pub patch_size: usize,
    pub in_channels: usize,
    /// Token embedding width; must be divisible by `num_heads`.
    pub embed_dim: usize,
    pub num_heads: usize,
    /// Number of transformer blocks.
    pub depth: usize,
    /// MLP hidden width as a multiple of `embed_dim`.
    pub mlp_ratio: f64,
    pub num_classes: usize,
    /// Prepend a learned classification token; otherwise the head consumes
    /// mean-pooled tokens.
    pub use_class_token: bool,
}

impl Default for ViTConfig {
    fn default() -> Self {
        // Desk-scale default: 32x32x3 inputs with 4x4 patches -> 64 tokens.
        Self {
            image_size: 32,
            patch_size: 4,
            in_channels: 3,
            embed_dim: 64,
            num_heads: 2,
            depth: 4,
            mlp_ratio: 2.0,
            num_classes: 10,
            use_class_token: true,
        }
    }
}

impl ViTConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 || self.patch_size == 0 {
            return Err(NetError::InvalidConfig(
                "image_size and patch_size must be positive".into(),
            ));
        }
        if self.image_size % self.patch_size != 0 {
            return Err(NetError::InvalidConfig(format!(
                "patch_size {} does not divide image_size {}",
                self.patch_size, self.image_size
            )));
        }
        if self.embed_dim == 0 || self.num_heads == 0 || self.embed_dim % self.num_heads != 0 {
            return Err(NetError::InvalidConfig(format!(
                "embed_dim {} must be a positive multiple of num_heads {}",
                self.embed_dim, self.num_heads
            )));
        }
        if self.depth == 0 {
            return Err(NetError::InvalidConfig("depth must be positive".into()));
        }
        if self.in_channels == 0 {
            return Err(NetError::InvalidConfig("in_channels must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(NetError::InvalidConfig(
                "num_classes must be at least 2".into(),
            ));
        }
        if self.mlp_hidden() == 0 {
            return Err(NetError::InvalidConfig(format!(
                "mlp_ratio {} yields an empty hidden layer",
                self.mlp_ratio
            )));
        }
        Ok(())
    }

    /// Number of image patches `N = (image_size / patch_size)^2`.
    pub fn num_patches(&self) -> usize {
        let g = self.image_size / self.patch_size;
        g * g
    }

    /// Patches per row/column of the patch grid.
    pub fn grid_size(&self) -> usize {
        self.image_size / self.patch_size
    }

    /// Sequence length: `N + 1` with a class token, `N` without.
    pub fn seq_len(&self) -> usize {
        self.num_patches() + usize::from(self.use_class_token)
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.num_heads
    }

    pub fn mlp_hidden(&self) -> usize {
        (self.embed_dim as f64 * self.mlp_ratio).round() as usize
    }

    /// Flattened patch length `P * P * C`.
    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * self.in_channels
    }

    pub fn image_shape(&self) -> Vec<usize> {
        vec![self.in_channels, self.image_size, self.image_size]
    }
}
