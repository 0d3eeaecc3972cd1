//! Configuration file: one TOML document, unknown keys rejected.

use std::path::{Path, PathBuf};

use modsel_core::dgp::{CandidateKind, DgpSpec};
use modsel_core::harness::{CriterionSpec, ExperimentConfig};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::exit::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub dgp: Option<DgpSpec>,
    #[serde(default)]
    pub data: Option<DataSource>,
    pub candidates: CandidateKind,
    pub criteria: Vec<CriterionSpec>,
    #[serde(default)]
    pub output: Option<Output>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub t_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub reference_model: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub csv: PathBuf,
    pub response: String,
    /// Prepend a column of ones as regressor 0.
    #[serde(default = "yes")]
    pub intercept: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

pub struct Loaded {
    pub config: Config,
    /// SHA-256 of the configuration with keys sorted.
    pub hash: String,
    pub dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let config: Config = toml::from_str(&text).map_err(|e| Failure::config(e.to_string()))?;
    let value: toml::Value = toml::from_str(&text).map_err(|e| Failure::config(e.to_string()))?;
    Ok(Loaded { config, hash: canonical_hash(&value), dir: path.parent().map(Path::to_path_buf).unwrap_or_default() })
}

/// Hash of the canonical JSON rendering (object keys sorted), so key order
/// and formatting in the file do not matter.
pub fn canonical_hash(value: &toml::Value) -> String {
    let json = serde_json::to_value(value).expect("TOML values are representable as JSON");
    hex::encode(Sha256::digest(json.to_string().as_bytes()))
}

impl Config {
    pub fn experiment(&self, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
        let exp = self.experiment.as_ref().ok_or_else(|| Failure::config("missing section `experiment`"))?;
        let dgp = self.dgp.clone().ok_or_else(|| Failure::config("missing section `dgp`"))?;
        if self.data.is_some() {
            return Err(Failure::config("section `data` is only used by `select`"));
        }
        Ok(ExperimentConfig {
            dgp,
            t_grid: exp.t_grid.clone(),
            replications: exp.replications,
            candidates: self.candidates.clone(),
            criteria: self.criteria.clone(),
            base_seed: seed.unwrap_or(exp.base_seed),
            reference_model: exp.reference_model.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: toml::Value = toml::from_str("a = 1\nb = [1, 2]\n[c]\nx = 'y'\nz = 2.5\n").unwrap();
        let b: toml::Value = toml::from_str("b = [1,2]\na = 1\n[c]\nz = 2.5\nx = \"y\"\n").unwrap();
        let c: toml::Value = toml::from_str("a = 1\nb = [2, 1]\n[c]\nx = 'y'\nz = 2.5\n").unwrap();
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
        assert_ne!(canonical_hash(&a), canonical_hash(&c));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[candidates]\nkind = 'subset-lattice'\npmax = 3\nextra = 1\n[[criteria]]\nkind = 'loo'\n";
        let err = toml::from_str::<Config>(text).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }
}
