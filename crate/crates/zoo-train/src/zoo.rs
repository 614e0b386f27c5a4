use vit_net::ViTConfig;

use crate::error::{Result, ZooError};

/// Named architectures serving as source and target models.
#[derive(Debug, Clone)]
pub struct ZooSpec {
    pub entries: Vec<(String, ViTConfig)>,
}

impl ZooSpec {
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.entries.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.entries.len() {
            return Err(ZooError::InvalidConfig("zoo names must be unique".into()));
        }
        for (name, cfg) in &self.entries {
            cfg.validate()
                .map_err(|e| ZooError::InvalidConfig(format!("{name}: {e}")))?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ViTConfig> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, cfg)| cfg)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }
}

/// Four architecturally distinct tiny ViTs on 32x32x3 inputs with 4x4
/// patches (64 tokens), varying depth, heads, and width.
pub fn default_zoo() -> ZooSpec {
    let base = ViTConfig::default(); // 32/4, cls token, mlp_ratio 2
    let entry = |name: &str, depth: usize, heads: usize, dim: usize| {
        (
            name.to_string(),
            ViTConfig {
                depth,
                num_heads: heads,
                embed_dim: dim,
                ..base.clone()
            },
        )
    };
    ZooSpec {
        entries: vec![
            entry("vit-a", 4, 2, 64),
            entry("vit-b", 6, 4, 64),
            entry("vit-c", 4, 4, 96),
            entry("vit-d", 8, 2, 64),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_zoo_is_valid_and_distinct() {
        let zoo = default_zoo();
        zoo.validate().unwrap();
        assert!(zoo.entries.len() >= 4);
        assert!(zoo.get("vit-a").is_some());
        assert!(zoo.get("nope").is_none());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut zoo = default_zoo();
        let first = zoo.entries[0].clone();
        zoo.entries.push(first);
        assert!(zoo.validate().is_err());
    }
}
