use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgqa_core::{BevConfig, GenerationConfig};

use crate::CliError;

/// File locations named in a config file. Relative paths resolve against
/// the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub scenes: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub blacklist: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Contents of a `--config` TOML file. Every key is optional.
///
/// ```toml
/// seed = 7
/// split = 0.82
/// workers = 4
///
/// [paths]
/// scenes = "scenes"
/// out = "out"
///
/// [generation]
/// max_pairs_per_scene = 64
///
/// [bev]
/// out_size_factor = 8
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Train fraction; overrides `generation.train_fraction`.
    pub split: Option<f64>,
    pub workers: Option<usize>,
    pub paths: Paths,
    pub generation: GenerationConfig,
    pub bev: BevConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.paths.scenes, &mut config.paths.registry, &mut config.paths.blacklist, &mut config.paths.out] {
            if let Some(rel) = p.as_ref().filter(|p| p.is_relative()) {
                *p = Some(base.join(rel));
            }
        }
        Ok(config)
    }

    /// Applies command-line (or environment) values over the file.
    pub fn apply(&mut self, overrides: &Overrides) {
        let set = |slot: &mut Option<PathBuf>, value: &Option<PathBuf>| {
            if value.is_some() {
                slot.clone_from(value);
            }
        };
        set(&mut self.paths.scenes, &overrides.scenes);
        set(&mut self.paths.registry, &overrides.registry);
        set(&mut self.paths.blacklist, &overrides.blacklist);
        set(&mut self.paths.out, &overrides.out);
        self.seed = overrides.seed.or(self.seed);
        self.split = overrides.split.or(self.split);
        self.workers = overrides.workers.or(self.workers);
    }

    /// Generation settings with the top-level seed and split folded in.
    pub fn effective_generation(&self) -> GenerationConfig {
        let mut g = self.generation.clone();
        if let Some(seed) = self.seed {
            g.seed = seed;
        }
        if let Some(split) = self.split {
            g.train_fraction = split;
        }
        g
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    /// Checks that every configured input path exists.
    pub fn check_paths(&self) -> Result<(), CliError> {
        for (name, path) in [("scenes", &self.paths.scenes), ("registry", &self.paths.registry), ("blacklist", &self.paths.blacklist)] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Usage(format!("{name} path {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// Values that win over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub split: Option<f64>,
    pub workers: Option<usize>,
    pub scenes: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub blacklist: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.effective_generation(), GenerationConfig::default());
    }

    #[test]
    fn flags_win_over_file() {
        let mut c = RunConfig::parse("seed = 3\nsplit = 0.5\n[generation]\nseed = 1\ncount_cap = 8\n").unwrap();
        assert_eq!(c.effective_generation().seed, 3);
        c.apply(&Overrides { seed: Some(9), ..Overrides::default() });
        let g = c.effective_generation();
        assert_eq!((g.seed, g.train_fraction, g.count_cap), (9, 0.5, 8));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("sed = 3"), Err(CliError::Usage(_))));
        assert!(RunConfig::parse("[generation]\nbogus = 1").is_err());
    }
}
