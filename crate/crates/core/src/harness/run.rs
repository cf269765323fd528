//! Run configuration and the on-disk layout of a training run.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::eval::SolarAccounting;
use super::report::write_learning_curve;
use super::train::TrainOutcome;
use crate::agent::TrainConfig;
use crate::data::{load_dataset, ColumnMap, Dataset, IngestOptions};
use crate::env::{EnvConfig, EnvSettings};
use crate::error::{Error, Result};

/// Which days are held out for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Number of chronologically last days to hold out. Ignored when `test_dates` is set.
    pub test_days: usize,
    pub test_dates: Vec<NaiveDate>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_days: 5,
            test_dates: Vec::new(),
        }
    }
}

impl SplitConfig {
    pub fn apply(&self, dataset: Dataset) -> Result<Dataset> {
        if self.test_dates.is_empty() {
            Ok(dataset.with_test_tail(self.test_days))
        } else {
            dataset.with_test_dates(&self.test_dates)
        }
    }
}

/// Everything a training run needs besides the data itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub env: EnvSettings,
    pub split: SplitConfig,
    pub columns: ColumnMap,
    pub ingest: IngestOptions,
    pub solar_accounting: SolarAccounting,
}

impl RunConfig {
    /// Parses TOML when `is_toml`, JSON otherwise, and validates the result.
    pub fn parse(text: &str, is_toml: bool) -> Result<Self> {
        let cfg: RunConfig = if is_toml {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, is_toml)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.env.battery.validate()?;
        if !(self.env.charging_threshold_kw >= 0.0) {
            return Err(Error::Config("charging_threshold_kw must be non-negative".into()));
        }
        if !(self.env.scaling.pv_cap_kw > 0.0 && self.env.scaling.load_cap_kw > 0.0) {
            return Err(Error::Config("feature scaling caps must be positive".into()));
        }
        Ok(())
    }

    /// Loads `data`, applies the split and derives the environment from the training days.
    pub fn prepare(&self, data: impl AsRef<Path>) -> Result<(Dataset, EnvConfig)> {
        let dataset = self.split.apply(load_dataset(data, &self.columns, self.ingest)?)?;
        let env = self.environment(&dataset)?;
        Ok((dataset, env))
    }

    pub fn environment(&self, dataset: &Dataset) -> Result<EnvConfig> {
        if dataset.train_days().next().is_none() {
            return Err(Error::EmptyDataset("training"));
        }
        EnvConfig::from_training_days(dataset.train_days(), &self.env)
    }
}

/// `run.json`: the configuration and data a run directory was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub data: PathBuf,
    pub config: RunConfig,
    pub config_hash: String,
    pub best_greedy_reward: f64,
    pub updates: u64,
}

pub const MANIFEST_FILE: &str = "run.json";
pub const BEST_CHECKPOINT_FILE: &str = "checkpoint_best.json";
pub const FINAL_CHECKPOINT_FILE: &str = "checkpoint_final.json";

/// Writes checkpoints, the learning curve and the manifest into `dir`.
pub fn write_run(dir: impl AsRef<Path>, data: &Path, config: &RunConfig, outcome: &TrainOutcome) -> Result<RunManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    outcome.best_checkpoint.save(dir.join(BEST_CHECKPOINT_FILE))?;
    outcome.final_checkpoint.save(dir.join(FINAL_CHECKPOINT_FILE))?;
    write_learning_curve(dir.join("curve"), &outcome.curve)?;
    let data = fs::canonicalize(data).unwrap_or_else(|_| data.to_path_buf());
    let manifest = RunManifest {
        data,
        config: config.clone(),
        config_hash: config.train.hash(),
        best_greedy_reward: outcome.best_greedy_reward,
        updates: outcome.updates,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<RunManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
