//! Resolved run configuration: defaults, then the TOML file, then the
//! out-dir environment override, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eegbands::dataset::{SyntheticConfig, Task};
use eegbands::experiment::ExperimentConfig;
use serde::{Deserialize, Serialize};

pub const OUT_DIR_ENV: &str = "EEGBANDS_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    /// WindowSet cache; disabled when absent.
    pub cache_dir: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("data/manifest.json"),
            out_dir: PathBuf::from("out"),
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub subjects: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub signal: SyntheticConfig,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            subjects: 23,
            seed: 7,
            signal: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Worker threads for grid cells; 0 uses the available parallelism.
    pub workers: usize,
    pub paths: Paths,
    pub experiment: ExperimentConfig,
    pub synthetic: SynthSettings,
}

impl RunConfig {
    /// Defaults overlaid with `file` and the environment.
    pub fn load(file: Option<&Path>) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            cfg.paths.out_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unserializable config: {e}\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use eegbands::dsp::BandName;

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
task = "image"
[experiment]
bands = ["beta", "all"]
[experiment.train]
max_epochs = 30
"#,
        )
        .unwrap();
        assert_eq!(cfg.task, Task::Image);
        assert_eq!(cfg.experiment.bands, vec![BandName::Beta, BandName::All]);
        assert_eq!(cfg.experiment.train.max_epochs, 30);
        assert_eq!(cfg.experiment.train.batch_size, 128);
        assert_eq!(cfg.paths, Paths::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.synthetic.signal.code_low_hz = 6.0;
        cfg.paths.cache_dir = Some(PathBuf::from("cache"));
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
