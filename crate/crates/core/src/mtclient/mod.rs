//! Translation and language-model clients.
//!
//! Backends implement [`Translator`] / [`LanguageModel`]. [`MockTranslator`]
//! and [`MockLm`] run offline and deterministically; [`HttpTranslator`] and
//! [`HttpLm`] speak the JSON protocol that [`MockServer`] also serves.

mod http;
mod mock;
mod server;

pub use http::{HttpLm, HttpTranslator, RetryPolicy};
pub use mock::{bias_text, mock_roundtrip_bias, MissPolicy, MockConfig, MockLm, MockTranslator};
pub use server::MockServer;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genderlex::Gender;

pub const MT_URL_ENV: &str = "FAIRFORGE_MT_URL";
pub const LM_URL_ENV: &str = "FAIRFORGE_LM_URL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtRequest {
    pub src_lang: String,
    pub tgt_lang: String,
    pub texts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<Gender>,
}

impl MtRequest {
    pub fn new(src_lang: &str, tgt_lang: &str, texts: Vec<String>) -> Self {
        MtRequest {
            src_lang: src_lang.to_string(),
            tgt_lang: tgt_lang.to_string(),
            texts,
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: Option<Gender>) -> Self {
        self.tag = tag;
        self
    }

    /// Texts as sent on the wire: the tag travels in-band as a prefix.
    pub fn wire_texts(&self) -> Vec<String> {
        match self.tag {
            Some(g) => self.texts.iter().map(|t| format!("{} {t}", tag_token(g))).collect(),
            None => self.texts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtResponse {
    pub translations: Vec<String>,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmRequest {
    pub prompt: String,
    pub max_tokens: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmResponse {
    pub text: String,
}

#[derive(Debug, Error)]
pub enum MtError {
    #[error("request timed out")]
    Timeout,
    #[error("backend returned HTTP {status}")]
    Http { status: u16 },
    #[error("backend returned {got} translations for {expected} texts")]
    LengthMismatch { expected: usize, got: usize },
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("unsupported language pair {0}")]
    Unsupported(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl MtError {
    /// Worth retrying: the same request may succeed later.
    pub fn is_transient(&self) -> bool {
        match self {
            MtError::Timeout | MtError::Unreachable(_) => true,
            MtError::Http { status } => *status >= 500,
            _ => false,
        }
    }
}

pub trait Translator: Send + Sync {
    fn translate_batch(&self, req: &MtRequest) -> Result<MtResponse, MtError>;
}

pub trait LanguageModel: Send + Sync {
    fn generate(&self, req: &LmRequest) -> Result<LmResponse, MtError>;
}

impl<T: Translator + ?Sized> Translator for Arc<T> {
    fn translate_batch(&self, req: &MtRequest) -> Result<MtResponse, MtError> {
        (**self).translate_batch(req)
    }
}

impl<T: LanguageModel + ?Sized> LanguageModel for Arc<T> {
    fn generate(&self, req: &LmRequest) -> Result<LmResponse, MtError> {
        (**self).generate(req)
    }
}

pub fn tag_token(g: Gender) -> &'static str {
    match g {
        Gender::F => "<f>",
        Gender::M => "<m>",
    }
}

/// Splits a leading "<f> "/"<m> " tag off a wire text.
pub fn strip_tag(text: &str) -> (Option<Gender>, &str) {
    for g in [Gender::F, Gender::M] {
        if let Some(rest) = text.strip_prefix(tag_token(g)) {
            return (Some(g), rest.strip_prefix(' ').unwrap_or(rest));
        }
    }
    (None, text)
}

/// Checks the alignment contract on a backend response.
pub fn check_aligned(req: &MtRequest, resp: MtResponse) -> Result<MtResponse, MtError> {
    if resp.translations.len() != req.texts.len() {
        return Err(MtError::LengthMismatch {
            expected: req.texts.len(),
            got: resp.translations.len(),
        });
    }
    Ok(resp)
}

/// Batching knobs for [`translate_all`].
#[derive(Debug, Clone, Copy)]
pub struct BatchConfig {
    pub batch_size: usize,
    pub in_flight: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            batch_size: 32,
            in_flight: 4,
        }
    }
}

/// Translates `texts` in batches, at most `in_flight` at a time. Output order
/// follows input order regardless of completion order; any failing batch
/// fails the whole call.
pub fn translate_all(
    client: &dyn Translator,
    src_lang: &str,
    tgt_lang: &str,
    texts: &[String],
    tag: Option<Gender>,
    cfg: BatchConfig,
) -> Result<Vec<String>, MtError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let batches: Vec<MtRequest> = texts
        .chunks(cfg.batch_size.max(1))
        .map(|c| MtRequest::new(src_lang, tgt_lang, c.to_vec()).with_tag(tag))
        .collect();
    let mut out = Vec::with_capacity(texts.len());
    for wave in batches.chunks(cfg.in_flight.max(1)) {
        let results: Vec<Result<MtResponse, MtError>> = std::thread::scope(|s| {
            let handles: Vec<_> = wave
                .iter()
                .map(|req| s.spawn(move || client.translate_batch(req).and_then(|r| check_aligned(req, r))))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(MtError::Protocol("worker panicked".into()))))
                .collect()
        });
        for r in results {
            out.extend(r?.translations);
        }
    }
    Ok(out)
}

/// Backends chosen from the environment: HTTP when the URL variable is set,
/// otherwise the in-process mock.
pub fn translator_from_env(mock: MockConfig) -> Arc<dyn Translator> {
    match std::env::var(MT_URL_ENV) {
        Ok(url) if !url.is_empty() => Arc::new(HttpTranslator::new(&url, RetryPolicy::default())),
        _ => Arc::new(MockTranslator::new(mock)),
    }
}

pub fn lm_from_env() -> Arc<dyn LanguageModel> {
    match std::env::var(LM_URL_ENV) {
        Ok(url) if !url.is_empty() => Arc::new(HttpLm::new(&url, RetryPolicy::default())),
        _ => Arc::new(MockLm::default()),
    }
}
