//! TOML run configuration.
//!
//! Every key is optional; missing keys take the library defaults.
//!
//! ```toml
//! distance = 3
//! circuit_type = "I"          # "I" or "II"
//! num_logical_qubits = 1
//! depths = [2, 4]
//! batch_size = 16
//! learning_rate = 0.003
//! aux_weight = 0.5
//! num_batches = 3200
//! stage = 1                   # 1 or 2
//! seed = 1
//! checkpoint_in = "stage1.ckpt"
//! checkpoint_out = "model.ckpt"
//! hidden = 64                 # single-qubit hidden size (h1q)
//! dataset = "train.bin"       # train from a file instead of sampling
//! shots = 10000               # per depth, for eval / bench / gen
//! max_weight = 2              # MLE enumeration bound
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mccd_core::logical::CircuitType;
use mccd_core::train::{Stage, TrainConfig};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub distance: Option<usize>,
    pub circuit_type: Option<String>,
    pub num_logical_qubits: Option<usize>,
    pub depths: Option<Vec<usize>>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub aux_weight: Option<f64>,
    pub num_batches: Option<usize>,
    pub stage: Option<u32>,
    pub seed: Option<u64>,
    pub checkpoint_in: Option<PathBuf>,
    pub checkpoint_out: Option<PathBuf>,
    pub hidden: Option<usize>,
    pub dataset: Option<PathBuf>,
    pub shots: Option<usize>,
    pub max_weight: Option<usize>,
}

/// Resolved settings for every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub shots: usize,
    pub max_weight: usize,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn resolve(self, seed: Option<u64>) -> Result<RunConfig> {
        let d = TrainConfig::default();
        let circuit_type = match self.circuit_type {
            Some(s) => s.parse::<CircuitType>()?,
            None => d.circuit_type,
        };
        let train = TrainConfig {
            distance: self.distance.unwrap_or(d.distance),
            circuit_type,
            num_logical_qubits: self.num_logical_qubits.unwrap_or(d.num_logical_qubits),
            depths: self.depths.unwrap_or(d.depths),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            aux_weight: self.aux_weight.unwrap_or(d.aux_weight),
            num_batches: self.num_batches.unwrap_or(d.num_batches),
            stage: Stage::from_number(self.stage.unwrap_or(1))?,
            seed: seed.or(self.seed).unwrap_or(d.seed),
            hidden: self.hidden,
            noise: d.noise,
            checkpoint_in: self.checkpoint_in,
            checkpoint_out: self.checkpoint_out,
            dataset: self.dataset,
        };
        Ok(RunConfig {
            train,
            shots: self.shots.unwrap_or(10_000),
            max_weight: self.max_weight.unwrap_or(2),
        })
    }
}

pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    match path {
        Some(p) => FileConfig::load(p)?.resolve(seed),
        None => FileConfig::default().resolve(seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let text = r#"
            distance = 5
            circuit_type = "II"
            num_logical_qubits = 2
            depths = [4, 8]
            batch_size = 8
            learning_rate = 0.01
            aux_weight = 0.0
            num_batches = 3
            stage = 2
            seed = 9
            checkpoint_in = "a.ckpt"
            checkpoint_out = "b.ckpt"
        "#;
        let cfg = FileConfig::parse(text).unwrap().resolve(None).unwrap();
        assert_eq!(cfg.train.distance, 5);
        assert_eq!(cfg.train.circuit_type, CircuitType::II);
        assert_eq!(cfg.train.stage, Stage::Two);
        assert_eq!(cfg.train.depths, vec![4, 8]);
        assert_eq!(cfg.train.seed, 9);
        assert!(cfg.train.validate().is_ok());
    }

    #[test]
    fn seed_flag_overrides_file() {
        let cfg = FileConfig::parse("seed = 3").unwrap().resolve(Some(4)).unwrap();
        assert_eq!(cfg.train.seed, 4);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(FileConfig::parse("depth = 3").is_err());
        assert!(FileConfig::parse("circuit_type = \"III\"").unwrap().resolve(None).is_err());
        assert!(FileConfig::parse("stage = 3").unwrap().resolve(None).is_err());
    }
}
