use vit_net::{ComponentKind, ViTConfig};

use crate::error::{AttackError, Result};

/// How extreme tokens are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// k largest and k smallest signed values.
    SignedExtremes,
    /// k largest and k smallest absolute values.
    MagnitudeExtremes,
}

/// How extreme gradients are eliminated on QKV/MLP matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EliminationMode {
    /// Rank each channel independently and zero individual entries; attention
    /// rows/columns are zeroed per head.
    PerChannelEntry,
    /// Score whole tokens (per-token L1 norm) and zero entire rows; attention
    /// rows/columns are zeroed across all heads.
    GlobalTokenRow,
}

/// Which of the three hook points participate in regularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentSet {
    pub attention: bool,
    pub qkv: bool,
    pub mlp: bool,
}

impl ComponentSet {
    pub const ALL: Self = Self {
        attention: true,
        qkv: true,
        mlp: true,
    };
    pub const NONE: Self = Self {
        attention: false,
        qkv: false,
        mlp: false,
    };

    pub fn contains(&self, kind: ComponentKind) -> bool {
        match kind {
            ComponentKind::Attention => self.attention,
            ComponentKind::Qkv => self.qkv,
            ComponentKind::Mlp => self.mlp,
        }
    }

    /// All 8 subsets in ablation-table order: none first, singletons, pairs,
    /// then the full set.
    pub fn all_subsets() -> [ComponentSet; 8] {
        let s = |attention, qkv, mlp| ComponentSet {
            attention,
            qkv,
            mlp,
        };
        [
            s(false, false, false),
            s(true, false, false),
            s(false, true, false),
            s(false, false, true),
            s(true, true, false),
            s(true, false, true),
            s(false, true, true),
            s(true, true, true),
        ]
    }

    pub fn label(&self) -> String {
        if *self == Self::NONE {
            return "none".into();
        }
        let mut parts = Vec::new();
        if self.attention {
            parts.push("attention");
        }
        if self.qkv {
            parts.push("qkv");
        }
        if self.mlp {
            parts.push("mlp");
        }
        parts.join("+")
    }
}

/// Hyper-parameters of the token gradient regularization itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TgrConfig {
    /// Extreme-token count per extremum; `2k` tokens are eliminated in total.
    pub k: usize,
    pub s_attention: f64,
    pub s_qkv: f64,
    pub s_mlp: f64,
    pub enabled_components: ComponentSet,
    pub selection_mode: SelectionMode,
    pub elimination_mode: EliminationMode,
}

impl Default for TgrConfig {
    fn default() -> Self {
        Self {
            k: 1,
            s_attention: 0.25,
            s_qkv: 0.75,
            s_mlp: 0.25,
            enabled_components: ComponentSet::ALL,
            selection_mode: SelectionMode::SignedExtremes,
            elimination_mode: EliminationMode::PerChannelEntry,
        }
    }
}

impl TgrConfig {
    /// Validate against the sequence length of the attacked model.
    pub fn validate(&self, seq_len: usize) -> Result<()> {
        if 2 * self.k >= seq_len {
            return Err(AttackError::invalid(
                "tgr.k",
                format!("2k = {} must be below the token count {seq_len}", 2 * self.k),
            ));
        }
        for (key, s) in [
            ("tgr.s_attention", self.s_attention),
            ("tgr.s_qkv", self.s_qkv),
            ("tgr.s_mlp", self.s_mlp),
        ] {
            if !(0.0..=1.0).contains(&s) {
                return Err(AttackError::invalid(
                    key,
                    format!("scaling factor {s} outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }
}

/// Per-iteration random patch masking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchOutConfig {
    pub num_patches: usize,
    pub rng_seed: u64,
}

/// All attack hyper-parameters. `epsilon` and `alpha` are expressed in pixel
/// units on the 0-255 scale and divided by 255 internally (images live in
/// `[0, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub steps: usize,
    /// Step size override; `None` means `epsilon / steps`.
    pub alpha: Option<f64>,
    /// Momentum decay.
    pub mu: f64,
    pub patchout: Option<PatchOutConfig>,
    pub tgr: Option<TgrConfig>,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: 16.0,
            steps: 10,
            alpha: None,
            mu: 1.0,
            patchout: None,
            tgr: Some(TgrConfig::default()),
            seed: 0,
        }
    }
}

impl AttackConfig {
    /// Plain momentum iterative baseline: the default parameters with
    /// regularization disabled.
    pub fn mim() -> Self {
        Self {
            tgr: None,
            ..Self::default()
        }
    }

    /// Effective step size on the 0-255 scale.
    pub fn effective_alpha(&self) -> f64 {
        match (self.alpha, self.steps) {
            (Some(a), _) => a,
            (None, 0) => 0.0,
            (None, t) => self.epsilon / t as f64,
        }
    }

    /// Epsilon on the `[0, 1]` pixel scale.
    pub fn epsilon_normalized(&self) -> f64 {
        self.epsilon / 255.0
    }

    /// Step size on the `[0, 1]` pixel scale.
    pub fn alpha_normalized(&self) -> f64 {
        self.effective_alpha() / 255.0
    }

    /// PatchOut with the default patch budget for `vit`: `ceil(0.66 * N)`.
    pub fn with_default_patchout(mut self, vit: &ViTConfig, rng_seed: u64) -> Self {
        let n = vit.num_patches();
        self.patchout = Some(PatchOutConfig {
            num_patches: (0.66 * n as f64).ceil() as usize,
            rng_seed,
        });
        self
    }

    /// Validate against the model that will be attacked.
    pub fn validate(&self, vit: &ViTConfig) -> Result<()> {
        if self.epsilon < 0.0 {
            return Err(AttackError::invalid("epsilon", "must be nonnegative"));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(AttackError::invalid("mu", "must be a nonnegative number"));
        }
        if let Some(a) = self.alpha {
            if a < 0.0 {
                return Err(AttackError::invalid("alpha", "must be nonnegative"));
            }
        }
        if let Some(p) = &self.patchout {
            let n = vit.num_patches();
            if p.num_patches == 0 || p.num_patches > n {
                return Err(AttackError::invalid(
                    "patchout.num_patches",
                    format!("{} outside 1..={n}", p.num_patches),
                ));
            }
        }
        if let Some(tgr) = &self.tgr {
            tgr.validate(vit.seq_len())?;
        }
        Ok(())
    }

    /// Short human label: `MIM`, `TGR`, `MIM-P`, or `TGR-P`.
    pub fn label(&self) -> String {
        let base = if self.tgr.is_some() { "TGR" } else { "MIM" };
        if self.patchout.is_some() {
            format!("{base}-P")
        } else {
            base.to_string()
        }
    }
}

mod kv;
pub use kv::{attack_config_from_kv, attack_config_to_kv};
