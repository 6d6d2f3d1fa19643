use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Every setting a run can use. Loaded from `--config` and overridden
/// field by field by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub background: Option<PathBuf>,
    /// Column of the data files holding the response, dropped before explaining.
    pub response: Option<String>,
    pub model: Option<String>,
    /// Second model, for `diagnose`.
    pub model_b: Option<String>,
    pub value: Option<String>,
    pub game: Option<String>,
    pub partition: Option<PathBuf>,
    pub tree: Option<PathBuf>,
    pub alpha: Option<Vec<f64>>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub mic_b_exponent: Option<f64>,
    pub std_errors: Option<bool>,
    pub batch_size: Option<usize>,
    pub family: Option<String>,
    pub samples: Option<usize>,
    pub trials: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(
            self, top, data, background, response, model, model_b, value, game, partition, tree, alpha, threshold, seed,
            workers, out, mic_b_exponent, std_errors, batch_size, family, samples, trials
        );
        self
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn require<'a, T>(field: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::Input(format!("missing --{flag}")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Number of partition sources given; at most one is allowed.
    pub fn partition_sources(&self) -> usize {
        [self.partition.is_some(), self.tree.is_some(), self.threshold.is_some()].iter().filter(|b| **b).count()
    }
}
