//! TOML config files. Every section rejects unknown keys.

use std::path::{Path, PathBuf};

use ggl_core::score::TrainConfig;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::{CliResult, Common, Failure};

/// Parse `--config` into `T`, or use its defaults.
pub fn load<T: DeserializeOwned + Default>(common: &Common) -> CliResult<T> {
    match &common.config {
        None => Ok(T::default()),
        Some(path) => parse_file(path),
    }
}

pub fn parse_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Reject flags that the command has no use for.
pub fn reject_sampler(common: &Common, command: &str) -> CliResult<()> {
    if common.sampler.is_some() {
        return Err(Failure::Config(format!("--sampler has no effect on {command}")));
    }
    Ok(())
}

/// Score-model training settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
    pub holdout: f64,
    pub log_every: usize,
    pub ema: f64,
    /// Prior draws used as training data.
    pub samples: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hidden: t.hidden,
            lr: t.lr,
            batch: t.batch,
            steps: t.steps,
            holdout: t.holdout,
            log_every: t.log_every,
            ema: t.ema,
            samples: 50_000,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, seed: u64) -> CliResult<TrainConfig> {
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.ema) || !(self.holdout > 0.0 && self.holdout < 0.5) {
            return Err(Failure::Config(
                "train: need lr > 0, 0 <= ema < 1 and 0 < holdout < 0.5".into(),
            ));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Failure::Config("train.hidden must list positive widths".into()));
        }
        Ok(TrainConfig {
            hidden: self.hidden.clone(),
            lr: self.lr,
            batch: self.batch,
            steps: self.steps,
            holdout: self.holdout,
            log_every: self.log_every,
            ema: self.ema,
            seed,
        })
    }
}

/// Output directory: `--out`, then `GGL_OUT_DIR`, then the config value.
pub fn out_dir(common: &Common, configured: &Path) -> PathBuf {
    if let Some(p) = &common.out {
        return p.clone();
    }
    match std::env::var_os(crate::OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}
