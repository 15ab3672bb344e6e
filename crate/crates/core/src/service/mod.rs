//! Transport-independent request handling: ask, feedback, import, health and
//! stats over a loaded similarity model and knowledge store.

mod config;

use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ServiceConfig, DEFAULT_IMPORT_LIMIT};

use crate::kb::{
    retrieve, KbError, KbIndex, KbStats, KbStore, RetrieveOptions, SourceRef, Verdict,
};
use crate::ner::NerPipeline;
use crate::sim::SimPipeline;
use crate::text::Vocabulary;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("failed to load {what}: {message}")]
    Load { what: &'static str, message: String },
}

/// A structured error returned to clients as `{"code", "message"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn not_ready() -> Self {
        Self::new(503, "not_ready", "models are still loading")
    }
}

impl From<KbError> for ApiError {
    fn from(e: KbError) -> Self {
        let message = e.to_string();
        match e {
            KbError::Parse { .. } | KbError::Json(_) => Self::new(400, "parse_error", message),
            KbError::Validation(_) => Self::new(400, "validation_error", message),
            KbError::Conflict(_) => Self::new(409, "conflict", message),
            KbError::NotFound(_) => Self::new(404, "not_found", message),
            KbError::Sim(_) | KbError::Io(_) => Self::new(500, "internal", message),
        }
    }
}

fn default_top_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskRequest {
    pub question: String,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub question: String,
    pub answer: String,
    pub score: f64,
    pub source: SourceRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub candidates: Vec<Candidate>,
    pub history_id: String,
    /// Set when the requested `top_k` exceeded the configured cap.
    #[serde(default)]
    pub top_k_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub history_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub feedback_id: String,
    pub history_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub added: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Health {
    Starting,
    Ready,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: Health,
}

/// Models loaded once at startup; never mutated by requests.
pub struct Models {
    pub sim: SimPipeline,
    pub ner: Option<NerPipeline>,
}

struct KbState {
    store: KbStore,
    index: KbIndex,
}

pub struct QaService {
    config: ServiceConfig,
    models: OnceLock<Models>,
    kb: RwLock<Option<KbState>>,
}

impl QaService {
    /// A service in the `starting` state.
    pub fn new(config: ServiceConfig) -> Self {
        QaService {
            config,
            models: OnceLock::new(),
            kb: RwLock::new(None),
        }
    }

    /// A ready service over already-loaded parts.
    pub fn from_parts(config: ServiceConfig, models: Models, store: KbStore) -> Self {
        let service = Self::new(config);
        service.install(models, store);
        service
    }

    fn install(&self, models: Models, store: KbStore) {
        let index = KbIndex::build(store.records(), &models.sim);
        *self.kb.write().expect("kb lock") = Some(KbState { store, index });
        if self.models.set(models).is_err() {
            tracing::warn!("models were already installed");
        }
    }

    /// Loads the configured models and store; fails on any missing or
    /// unreadable file.
    pub fn load(&self) -> Result<(), ServiceError> {
        self.config.check_files()?;
        let cfg = &self.config;
        let sim_path = cfg.sim_model.as_ref().expect("checked");
        let load_err = |what: &'static str, e: &dyn std::fmt::Display| ServiceError::Load {
            what,
            message: e.to_string(),
        };
        let mut sim = SimPipeline::load(sim_path).map_err(|e| load_err("similarity model", &e))?;
        if let Some(vocab) = &cfg.vocab {
            let vocab = Vocabulary::load(vocab).map_err(|e| load_err("vocabulary", &e))?;
            sim = sim
                .with_vocab(vocab)
                .map_err(|e| load_err("vocabulary", &e))?;
        }
        let ner = match &cfg.ner_model {
            Some(p) => Some(NerPipeline::load(p).map_err(|e| load_err("entity model", &e))?),
            None => None,
        };
        let store = KbStore::open(cfg.kb.as_ref().expect("checked"))
            .map_err(|e| load_err("knowledge store", &e))?;
        tracing::info!(records = store.len(), "knowledge store loaded");
        self.install(Models { sim, ner }, store);
        Ok(())
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn models(&self) -> Option<&Models> {
        self.models.get()
    }

    pub fn health(&self) -> HealthResponse {
        let ready = self.models.get().is_some() && self.kb.read().expect("kb lock").is_some();
        HealthResponse {
            status: if ready {
                Health::Ready
            } else {
                Health::Starting
            },
        }
    }

    pub fn handle_ask(&self, req: &AskRequest) -> Result<AskResponse, ApiError> {
        let question = req.question.trim();
        if question.is_empty() {
            return Err(ApiError::new(400, "empty_question", "question is empty"));
        }
        let models = self.models.get().ok_or_else(ApiError::not_ready)?;
        let top_k_clamped = req.top_k > self.config.top_k_cap;
        let options = RetrieveOptions {
            top_k: req.top_k.min(self.config.top_k_cap),
            prefilter_m: self.config.prefilter_m,
            min_score: self.config.min_score,
        };
        let results = {
            let guard = self.kb.read().expect("kb lock");
            let kb = guard.as_ref().ok_or_else(ApiError::not_ready)?;
            retrieve(
                question,
                kb.store.records(),
                &kb.index,
                &models.sim,
                &options,
            )?
        };
        let history = {
            let mut guard = self.kb.write().expect("kb lock");
            let kb = guard.as_mut().ok_or_else(ApiError::not_ready)?;
            kb.store.log_query(question, &results)?
        };
        Ok(AskResponse {
            candidates: results
                .into_iter()
                .map(|r| Candidate {
                    question: r.record.question,
                    answer: r.record.answer,
                    score: r.score,
                    source: r.record.source,
                })
                .collect(),
            history_id: history.id,
            top_k_clamped,
        })
    }

    pub fn handle_feedback(&self, req: &FeedbackRequest) -> Result<FeedbackResponse, ApiError> {
        let mut guard = self.kb.write().expect("kb lock");
        let kb = guard.as_mut().ok_or_else(ApiError::not_ready)?;
        let entry = kb
            .store
            .record_feedback(&req.history_id, req.verdict, &req.comment)?;
        Ok(FeedbackResponse {
            feedback_id: entry.id,
            history_id: entry.history_id,
        })
    }

    /// Imports a JSON array or JSON Lines body and indexes the new records.
    pub fn handle_import(&self, body: &[u8]) -> Result<ImportResponse, ApiError> {
        if body.len() > self.config.import_limit_bytes {
            return Err(ApiError::new(
                413,
                "payload_too_large",
                format!("import exceeds {} bytes", self.config.import_limit_bytes),
            ));
        }
        let text = std::str::from_utf8(body)
            .map_err(|e| ApiError::new(400, "parse_error", e.to_string()))?;
        let models = self.models.get().ok_or_else(ApiError::not_ready)?;
        let mut guard = self.kb.write().expect("kb lock");
        let kb = guard.as_mut().ok_or_else(ApiError::not_ready)?;
        let before = kb.store.len();
        let added = kb.store.import_str(text)?;
        kb.index.extend(&kb.store.records()[before..], &models.sim);
        Ok(ImportResponse { added })
    }

    pub fn stats(&self) -> Result<KbStats, ApiError> {
        let guard = self.kb.read().expect("kb lock");
        Ok(guard
            .as_ref()
            .ok_or_else(ApiError::not_ready)?
            .store
            .stats())
    }
}
