use std::path::Path;

use lucid_dream::dreamer::{DreamConfig, DEFAULT_COUNT};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Contents of a `--config` file.
///
/// ```toml
/// seed = 3
/// count = 100
///
/// [dream]
/// rotation_deg = 15.0
///
/// [dream.illumination]
/// b = 0.2
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub count: usize,
    pub dream: DreamConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: DEFAULT_COUNT,
            dream: DreamConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// File config (or defaults) with the given flags applied on top.
    pub fn resolve(
        file: Option<&Path>,
        seed: Option<u64>,
        count: Option<usize>,
    ) -> Result<Self, Failure> {
        let mut config = match file {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some(seed) = seed {
            config.seed = seed;
        }
        if let Some(count) = count {
            config.count = count;
        }
        if config.count == 0 {
            return Err(Failure::Usage("count must be at least 1".into()));
        }
        config
            .dream
            .validate()
            .map_err(|e| Failure::Usage(format!("invalid configuration: {e}")))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 3\ncount = 10\n[dream]\nrotation_deg = 15.0\n",
        )
        .unwrap();
        let c = RunConfig::resolve(Some(&path), Some(9), None).unwrap();
        assert_eq!((c.seed, c.count), (9, 10));
        assert_eq!(c.dream.rotation_deg, 15.0);
        assert_eq!(c.dream.scale, DreamConfig::default().scale);
    }

    #[test]
    fn bad_configs_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "colour = 1\n").unwrap();
        assert_eq!(
            RunConfig::resolve(Some(&path), None, None)
                .unwrap_err()
                .code(),
            1
        );
        std::fs::write(&path, "[dream]\nscale = 5.0\n").unwrap();
        assert_eq!(
            RunConfig::resolve(Some(&path), None, None)
                .unwrap_err()
                .code(),
            1
        );
        assert_eq!(
            RunConfig::resolve(None, None, Some(0)).unwrap_err().code(),
            1
        );
    }

    #[test]
    fn documented_example_parses() {
        let text = "seed = 3\ncount = 100\n\n[dream]\nrotation_deg = 15.0\n\n[dream.illumination]\nb = 0.2\n";
        let c: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(c.dream.illumination.b, 0.2);
        assert_eq!(c.dream.illumination.a, 0.05);
    }
}
