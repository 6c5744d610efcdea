//! Pipeline configuration: a plain `key=value` file whose keys mirror the
//! command-line flags one-to-one. Defaults < config file < flags.

use fpunwrap_core::raster::Rounding;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Where each slice pins its accumulated coordinate origin. The central
/// valid cell is the only policy: it keeps the output centered on the
/// finger axis and is what the flattening stages guarantee.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AnchorPolicy {
    #[default]
    Center,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub degree: usize,
    pub partitions: usize,
    pub anchor: AnchorPolicy,
    /// None selects the automatic pitch (median adjacent unwrapped step).
    pub pitch: Option<f64>,
    pub rounding: Rounding,
    pub background: u8,
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub workers: usize,
    pub emit_cloud: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            degree: 2,
            partitions: 8,
            anchor: AnchorPolicy::Center,
            pitch: None,
            rounding: Rounding::HalfAwayFromZero,
            background: 255,
            input: None,
            output_dir: None,
            workers: 1,
            emit_cloud: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected \"key=value\"")]
    NotKeyValue { line: usize },
    #[error("line {line}: {source}")]
    BadValue { line: usize, source: Box<ConfigError> },
    #[error("unknown key \"{0}\"")]
    UnknownKey(String),
    #[error("{key}: cannot parse \"{value}\"")]
    Unparseable { key: String, value: String },
    #[error("partitions must be at least 1")]
    NoPartitions,
    #[error("pitch must be positive (or \"auto\")")]
    BadPitch,
    #[error("workers must be at least 1")]
    NoWorkers,
    #[error("no input path given")]
    MissingInput,
    #[error("no output directory given")]
    MissingOutputDir,
}

impl PipelineConfig {
    /// Applies one `key=value` assignment. Keys match the CLI flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let cant = || ConfigError::Unparseable { key: key.to_string(), value: value.to_string() };
        match key {
            "degree" => self.degree = value.parse().map_err(|_| cant())?,
            "partitions" => self.partitions = value.parse().map_err(|_| cant())?,
            "anchor" => match value {
                "center" => self.anchor = AnchorPolicy::Center,
                _ => return Err(cant()),
            },
            "pitch" => {
                self.pitch = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| cant())?)
                }
            }
            "rounding" => match value {
                "half-away" => self.rounding = Rounding::HalfAwayFromZero,
                "half-even" => self.rounding = Rounding::HalfToEven,
                _ => return Err(cant()),
            },
            "background" => self.background = value.parse().map_err(|_| cant())?,
            "input" => self.input = Some(PathBuf::from(value)),
            "output-dir" => self.output_dir = Some(PathBuf::from(value)),
            "workers" => self.workers = value.parse().map_err(|_| cant())?,
            "emit-cloud" => match value {
                "true" => self.emit_cloud = true,
                "false" => self.emit_cloud = false,
                _ => return Err(cant()),
            },
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Folds a config file in: blank lines and `#` comments are skipped,
    /// everything else must be `key=value`.
    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path)?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::NotKeyValue { line: idx + 1 })?;
            self.set(key.trim(), value.trim()).map_err(|source| ConfigError::BadValue {
                line: idx + 1,
                source: Box::new(source),
            })?;
        }
        Ok(())
    }

    /// Cross-field checks, called once the config is fully assembled.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.partitions < 1 {
            return Err(ConfigError::NoPartitions);
        }
        if let Some(p) = self.pitch {
            if !(p > 0.0) || !p.is_finite() {
                return Err(ConfigError::BadPitch);
            }
        }
        if self.workers < 1 {
            return Err(ConfigError::NoWorkers);
        }
        Ok(())
    }
}
