//! Blocking JSON-over-HTTP clients.

use std::time::Duration;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use ureq::Agent;

use super::{check_aligned, LanguageModel, LmRequest, LmResponse, MtError, MtRequest, MtResponse, Translator};

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    /// Attempts after the first one.
    pub max_retries: u32,
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }
}

fn map_err(e: ureq::Error) -> MtError {
    match e {
        ureq::Error::StatusCode(status) => MtError::Http { status },
        ureq::Error::Timeout(_) => MtError::Timeout,
        ureq::Error::HostNotFound | ureq::Error::ConnectionFailed => MtError::Unreachable(e.to_string()),
        ureq::Error::Io(io) => match io.kind() {
            std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => MtError::Timeout,
            _ => MtError::Unreachable(io.to_string()),
        },
        other => MtError::Protocol(other.to_string()),
    }
}

#[derive(Debug, Clone)]
struct Client {
    agent: Agent,
    base: String,
    retry: RetryPolicy,
}

impl Client {
    fn new(base_url: &str, retry: RetryPolicy) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(retry.timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Client {
            agent,
            base: base_url.trim_end_matches('/').to_string(),
            retry,
        }
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, MtError> {
        let url = format!("{}{path}", self.base);
        let mut attempt = 0;
        loop {
            let result = self
                .agent
                .post(&url)
                .send_json(body)
                .map_err(map_err)
                .and_then(|mut resp| resp.body_mut().read_json::<R>().map_err(|e| MtError::Protocol(e.to_string())));
            match result {
                Err(e) if e.is_transient() && attempt < self.retry.max_retries => {
                    let delay = self.retry.base_delay * 2u32.pow(attempt);
                    log::warn!("{url}: {e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    src_lang: &'a str,
    tgt_lang: &'a str,
    texts: Vec<String>,
}

#[derive(Deserialize)]
struct WireResponse {
    translations: Vec<String>,
    #[serde(default)]
    backend_id: String,
}

/// `POST {base}/translate`. Gender tags are sent in-band as text prefixes.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    client: Client,
}

impl HttpTranslator {
    pub fn new(base_url: &str, retry: RetryPolicy) -> Self {
        HttpTranslator {
            client: Client::new(base_url, retry),
        }
    }
}

impl Translator for HttpTranslator {
    fn translate_batch(&self, req: &MtRequest) -> Result<MtResponse, MtError> {
        if req.texts.is_empty() {
            return Err(MtError::EmptyBatch);
        }
        let wire = WireRequest {
            src_lang: &req.src_lang,
            tgt_lang: &req.tgt_lang,
            texts: req.wire_texts(),
        };
        let resp: WireResponse = self.client.post("/translate", &wire)?;
        check_aligned(
            req,
            MtResponse {
                translations: resp.translations,
                backend_id: resp.backend_id,
            },
        )
    }
}

/// `POST {base}/generate`.
#[derive(Debug, Clone)]
pub struct HttpLm {
    client: Client,
}

impl HttpLm {
    pub fn new(base_url: &str, retry: RetryPolicy) -> Self {
        HttpLm {
            client: Client::new(base_url, retry),
        }
    }
}

impl LanguageModel for HttpLm {
    fn generate(&self, req: &LmRequest) -> Result<LmResponse, MtError> {
        if req.prompt.trim().is_empty() {
            return Err(MtError::EmptyPrompt);
        }
        self.client.post("/generate", req)
    }
}
