//! Run configuration: a TOML file whose sections mirror the library configs.
//! Command-line flags are applied on top, so flags win.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use objnav_core::eval::{EpisodeConfig, Task, TaskParams, EXEC_HEIGHTS};
use objnav_core::world::WorldGenParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub world: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    /// Either a count of generated worlds or a list of world files.
    pub worlds: WorldSource,
    pub tasks: Vec<Task>,
    pub heights: Vec<f64>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            worlds: WorldSource::Count(20),
            tasks: Task::ALL.to_vec(),
            heights: EXEC_HEIGHTS.to_vec(),
            seeds: vec![0],
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldSource {
    Count(usize),
    Files(Vec<PathBuf>),
}

impl std::str::FromStr for WorldSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(n) = s.trim().parse::<usize>() {
            return Ok(WorldSource::Count(n));
        }
        let files: Vec<PathBuf> = s.split(',').filter(|p| !p.is_empty()).map(PathBuf::from).collect();
        if files.is_empty() {
            return Err("expected a world count or comma-separated world files".into());
        }
        Ok(WorldSource::Files(files))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    /// Procedural world parameters; `world.seed` also seeds `run` worlds.
    pub world: WorldGenParams,
    pub task: TaskParams,
    pub episode: EpisodeConfig,
    pub suite: SuiteSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Every referenced input file must exist.
    pub fn check_paths(&self) -> Result<()> {
        let mut inputs: Vec<&PathBuf> = self.paths.world.iter().chain(self.paths.map.iter()).collect();
        if let WorldSource::Files(fs) = &self.suite.worlds {
            inputs.extend(fs);
        }
        for p in inputs {
            if !p.exists() {
                bail!("referenced file {} does not exist", p.display());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn sections_override_fields() {
        let cfg: RunConfig = toml::from_str(
            r#"
            [world]
            seed = 7
            rooms = 2
            [episode.controller]
            gain = 0.8
            [suite]
            worlds = 3
            tasks = ["IMITATE", "REVERSE"]
            heights = [0.4]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.world.seed, 7);
        assert_eq!(cfg.world.rooms, 2);
        assert_eq!(cfg.world.objects_per_room, WorldGenParams::default().objects_per_room);
        assert_eq!(cfg.episode.controller.gain, 0.8);
        assert_eq!(cfg.episode.controller.beta, 5.0);
        assert_eq!(cfg.suite.worlds, WorldSource::Count(3));
        assert_eq!(cfg.suite.tasks, vec![Task::Imitate, Task::Reverse]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[paths]\nworld_file = \"x\"").is_err());
    }

    #[test]
    fn world_source_parses_counts_and_files() {
        assert_eq!("4".parse::<WorldSource>().unwrap(), WorldSource::Count(4));
        assert_eq!(
            "a.json,b.json".parse::<WorldSource>().unwrap(),
            WorldSource::Files(vec!["a.json".into(), "b.json".into()])
        );
    }

    #[test]
    fn missing_inputs_are_reported() {
        let mut cfg = RunConfig::default();
        cfg.paths.world = Some("/nonexistent/world.json".into());
        assert!(cfg.check_paths().is_err());
    }
}
