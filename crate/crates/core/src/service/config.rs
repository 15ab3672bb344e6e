use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ServiceError;

pub const DEFAULT_IMPORT_LIMIT: usize = 50 * 1024 * 1024;

/// Service settings, read from a TOML file and overridable by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Snapshot file of the knowledge store.
    pub kb: Option<PathBuf>,
    pub sim_model: Option<PathBuf>,
    pub ner_model: Option<PathBuf>,
    /// Replaces the vocabulary embedded in the similarity checkpoint.
    pub vocab: Option<PathBuf>,
    pub prefilter_m: usize,
    pub top_k_cap: usize,
    pub min_score: f64,
    pub import_limit_bytes: usize,
    /// Directory served at `/`.
    pub static_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            kb: None,
            sim_model: None,
            ner_model: None,
            vocab: None,
            prefilter_m: 0,
            top_k_cap: 20,
            min_score: 0.0,
            import_limit_bytes: DEFAULT_IMPORT_LIMIT,
            static_dir: None,
            seed: 7,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads a TOML file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            for p in [
                &mut config.kb,
                &mut config.sim_model,
                &mut config.ner_model,
                &mut config.vocab,
                &mut config.static_dir,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Checks that every referenced file exists.
    pub fn check_files(&self) -> Result<(), ServiceError> {
        let sim = self
            .sim_model
            .as_ref()
            .ok_or_else(|| ServiceError::Config("no similarity model configured".into()))?;
        for (what, path) in [
            ("similarity model", Some(sim)),
            ("entity model", self.ner_model.as_ref()),
            ("vocabulary", self.vocab.as_ref()),
            ("static directory", self.static_dir.as_ref()),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(ServiceError::Config(format!(
                        "{what} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if self.kb.is_none() {
            return Err(ServiceError::Config("no knowledge store configured".into()));
        }
        Ok(())
    }
}
