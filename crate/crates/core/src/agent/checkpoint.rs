//! Versioned JSON checkpoints: network layout and parameters, training config
//! and its hash, learner RNG state and the environment the agent was trained in.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dqn::TrainConfig;
use super::network::QNetwork;
use crate::env::EnvConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub network: QNetwork,
    pub train_config: TrainConfig,
    pub config_hash: String,
    pub rng_state: Option<ChaCha8Rng>,
    pub env: EnvConfig,
    pub epochs_completed: usize,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

impl Checkpoint {
    pub fn new(
        network: QNetwork,
        train_config: &TrainConfig,
        rng_state: Option<ChaCha8Rng>,
        env: EnvConfig,
        epochs_completed: usize,
    ) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            network,
            config_hash: train_config.hash(),
            train_config: train_config.clone(),
            rng_state,
            env,
            epochs_completed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses a checkpoint, rejecting other format versions before looking at the payload.
    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: probe.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.config_hash != ckpt.train_config.hash() {
            return Err(Error::Config("checkpoint config hash does not match its config".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
