//! Flat `key = value` text serialization of [`AttackConfig`].
//!
//! One key per line; `#` starts a comment; unknown keys are errors. Keys:
//!
//! ```text
//! epsilon               f64, pixel units on the 0-255 scale (default 16)
//! steps                 usize (default 10)
//! alpha                 f64, optional; omitted means epsilon / steps
//! mu                    f64 (default 1.0)
//! seed                  u64 (default 0)
//! patchout.num_patches  usize; presence enables PatchOut
//! patchout.seed         u64 (default 0)
//! tgr.enabled           true | false (default true)
//! tgr.k                 usize (default 1)
//! tgr.s_attention       f64 in [0, 1] (default 0.25)
//! tgr.s_qkv             f64 in [0, 1] (default 0.75)
//! tgr.s_mlp             f64 in [0, 1] (default 0.25)
//! tgr.components        comma list of attention, qkv, mlp (default all)
//! tgr.selection         signed | magnitude (default signed)
//! tgr.elimination       per_channel | token_row (default per_channel)
//! ```

use std::str::FromStr;

use super::{
    AttackConfig, ComponentSet, EliminationMode, PatchOutConfig, SelectionMode, TgrConfig,
};
use crate::error::{AttackError, Result};

/// Render a config as the flat key-value document.
pub fn attack_config_to_kv(cfg: &AttackConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("epsilon", cfg.epsilon.to_string());
    push("steps", cfg.steps.to_string());
    if let Some(a) = cfg.alpha {
        push("alpha", a.to_string());
    }
    push("mu", cfg.mu.to_string());
    push("seed", cfg.seed.to_string());
    if let Some(p) = &cfg.patchout {
        push("patchout.num_patches", p.num_patches.to_string());
        push("patchout.seed", p.rng_seed.to_string());
    }
    match &cfg.tgr {
        None => push("tgr.enabled", "false".into()),
        Some(t) => {
            push("tgr.enabled", "true".into());
            push("tgr.k", t.k.to_string());
            push("tgr.s_attention", t.s_attention.to_string());
            push("tgr.s_qkv", t.s_qkv.to_string());
            push("tgr.s_mlp", t.s_mlp.to_string());
            push("tgr.components", t.enabled_components.label().replace('+', ","));
            push(
                "tgr.selection",
                match t.selection_mode {
                    SelectionMode::SignedExtremes => "signed".into(),
                    SelectionMode::MagnitudeExtremes => "magnitude".into(),
                },
            );
            push(
                "tgr.elimination",
                match t.elimination_mode {
                    EliminationMode::PerChannelEntry => "per_channel".into(),
                    EliminationMode::GlobalTokenRow => "token_row".into(),
                },
            );
        }
    }
    out
}

/// Parse the flat key-value document produced by [`attack_config_to_kv`].
pub fn attack_config_from_kv(text: &str) -> Result<AttackConfig> {
    let mut cfg = AttackConfig::default();
    let mut tgr = TgrConfig::default();
    let mut tgr_enabled = true;
    let mut patchout_patches: Option<usize> = None;
    let mut patchout_seed = 0u64;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| AttackError::ConfigParse {
            line: line_no,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "epsilon" => cfg.epsilon = parse(key, value, line_no)?,
            "steps" => cfg.steps = parse(key, value, line_no)?,
            "alpha" => cfg.alpha = Some(parse(key, value, line_no)?),
            "mu" => cfg.mu = parse(key, value, line_no)?,
            "seed" => cfg.seed = parse(key, value, line_no)?,
            "patchout.num_patches" => patchout_patches = Some(parse(key, value, line_no)?),
            "patchout.seed" => patchout_seed = parse(key, value, line_no)?,
            "tgr.enabled" => tgr_enabled = parse(key, value, line_no)?,
            "tgr.k" => tgr.k = parse(key, value, line_no)?,
            "tgr.s_attention" => tgr.s_attention = parse(key, value, line_no)?,
            "tgr.s_qkv" => tgr.s_qkv = parse(key, value, line_no)?,
            "tgr.s_mlp" => tgr.s_mlp = parse(key, value, line_no)?,
            "tgr.components" => tgr.enabled_components = parse_components(value, line_no)?,
            "tgr.selection" => {
                tgr.selection_mode = match value {
                    "signed" => SelectionMode::SignedExtremes,
                    "magnitude" => SelectionMode::MagnitudeExtremes,
                    other => {
                        return Err(AttackError::ConfigParse {
                            line: line_no,
                            reason: format!(
                                "tgr.selection: `{other}` is not `signed` or `magnitude`"
                            ),
                        })
                    }
                }
            }
            "tgr.elimination" => {
                tgr.elimination_mode = match value {
                    "per_channel" => EliminationMode::PerChannelEntry,
                    "token_row" => EliminationMode::GlobalTokenRow,
                    other => {
                        return Err(AttackError::ConfigParse {
                            line: line_no,
                            reason: format!(
                                "tgr.elimination: `{other}` is not `per_channel` or `token_row`"
                            ),
                        })
                    }
                }
            }
            other => {
                return Err(AttackError::ConfigParse {
                    line: line_no,
                    reason: format!("unknown key `{other}`"),
                })
            }
        }
    }

    cfg.patchout = patchout_patches.map(|num_patches| PatchOutConfig {
        num_patches,
        rng_seed: patchout_seed,
    });
    cfg.tgr = tgr_enabled.then_some(tgr);
    Ok(cfg)
}

fn parse<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| AttackError::ConfigParse {
        line,
        reason: format!("{key}: cannot parse `{value}`: {e}"),
    })
}

fn parse_components(value: &str, line: usize) -> Result<ComponentSet> {
    let mut set = ComponentSet::NONE;
    if value == "none" {
        return Ok(set);
    }
    for part in value.split(',') {
        match part.trim() {
            "attention" => set.attention = true,
            "qkv" => set.qkv = true,
            "mlp" => set.mlp = true,
            "" => {}
            other => {
                return Err(AttackError::ConfigParse {
                    line,
                    reason: format!("tgr.components: unknown component `{other}`"),
                })
            }
        }
    }
    Ok(set)
}
