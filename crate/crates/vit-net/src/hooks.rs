use tensor_core::Tensor;

/// The three intra-block tensors whose gradients can be intercepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    /// Gradient w.r.t. the post-softmax attention probability map,
    /// shape `[num_heads, S, S]`.
    Attention,
    /// Gradient w.r.t. the input of the fused QKV projection, shape `[S, D]`.
    Qkv,
    /// Gradient w.r.t. the input of the MLP block (after its layer norm),
    /// shape `[S, D]`.
    Mlp,
}

impl std::fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComponentKind::Attention => write!(f, "Attention"),
            ComponentKind::Qkv => write!(f, "QKV"),
            ComponentKind::Mlp => write!(f, "MLP"),
        }
    }
}

/// A back-propagated gradient tagged with its component kind and block index.
#[derive(Debug, Clone)]
pub struct ModuleGradient {
    pub kind: ComponentKind,
    pub block_index: usize,
    pub grad: Tensor,
}

/// Caller-supplied gradient rewrite applied during backward.
///
/// The returned tensor replaces the intercepted gradient and is what continues
/// to flow upstream; it must keep the shape of the input. Hooks must be
/// reentrant: backward passes for different samples may run concurrently.
pub type HookFn = dyn Fn(&ModuleGradient) -> Tensor + Send + Sync;
