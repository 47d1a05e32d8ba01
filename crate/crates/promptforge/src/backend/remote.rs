//! Generic HTTP/JSON completion client.
//!
//! One POST per completion. The wire schema is deliberately minimal so a
//! thin server-side shim can adapt it to any hosted completion API:
//!
//! request  {engine, prompt, max_tokens, temperature, logit_restriction?, stop?}
//! response {text, finish_reason}
//!
//! Transport failures and 429 responses are retried up to three attempts
//! with 1s/2s/4s backoff; any other non-2xx status is surfaced at once.
//! Responses to restricted requests are re-validated locally, so the
//! membership guarantee holds even against a sloppy server.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ratelimit::{Clock, RateLimiter, SystemClock};
use super::{BackendConfig, CompletionBackend, CompletionRequest, CompletionResponse, FinishReason};
use crate::error::{Error, Result};

const MAX_ATTEMPTS: u32 = 3;
const BACKOFF_SECONDS: [u64; 3] = [1, 2, 4];
const REQUEST_TIMEOUT: Duration = Duration::from_secs(30);
const BODY_SNIPPET: usize = 200;

#[derive(Serialize)]
struct WireRequest<'a> {
    engine: &'a str,
    prompt: &'a str,
    max_tokens: usize,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    logit_restriction: Option<&'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<&'a [String]>,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
    finish_reason: String,
}

pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    endpoint_url: String,
    engine: String,
    api_key: Option<String>,
    limiter: RateLimiter<Arc<dyn Clock>>,
    clock: Arc<dyn Clock>,
}

impl RemoteBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self> {
        RemoteBackend::with_clock(config, Arc::new(SystemClock::new()))
    }

    fn with_clock(config: &BackendConfig, clock: Arc<dyn Clock>) -> Result<Self> {
        let endpoint_url = config
            .endpoint_url
            .clone()
            .ok_or_else(|| Error::InvalidBackendConfig("remote backend requires an endpoint_url".into()))?;
        let api_key = match &config.api_key_env {
            None => None,
            Some(var) => match std::env::var(var) {
                Ok(key) if !key.is_empty() => Some(key),
                _ => {
                    return Err(Error::InvalidBackendConfig(format!(
                        "environment variable {var} is unset or empty"
                    )))
                }
            },
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(REQUEST_TIMEOUT)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(RemoteBackend {
            client,
            endpoint_url,
            engine: config.engine.clone(),
            api_key,
            limiter: RateLimiter::new(config.rate_limit, Arc::clone(&clock)),
            clock,
        })
    }

    fn send_once(&self, request: &CompletionRequest) -> std::result::Result<CompletionResponse, Attempt> {
        let body = WireRequest {
            engine: &self.engine,
            prompt: request.prompt(),
            max_tokens: request.max_tokens(),
            temperature: request.temperature(),
            logit_restriction: request.allowed_tokens(),
            stop: request.stop_sequences(),
        };
        let mut builder = self.client.post(&self.endpoint_url).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| Attempt::Retry(format!("transport: {e}")))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| Attempt::Retry(format!("transport: {e}")))?;
        if status.as_u16() == 429 {
            return Err(Attempt::Retry(format!("rate limited by server: {text}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(Error::BackendStatus {
                status: status.as_u16(),
                body: snippet(&text),
            }));
        }
        let wire: WireResponse = serde_json::from_str(&text).map_err(|e| {
            Attempt::Fatal(Error::Transport(format!(
                "malformed response body ({e}): {}",
                snippet(&text)
            )))
        })?;
        let finish_reason = match wire.finish_reason.to_ascii_lowercase().as_str() {
            "stop" => FinishReason::Stop,
            "length" => FinishReason::Length,
            "restricted" => FinishReason::Restricted,
            other => {
                return Err(Attempt::Fatal(Error::Transport(format!(
                    "unknown finish_reason {other:?}"
                ))))
            }
        };
        if let Some(allowed) = request.allowed_tokens() {
            if !allowed.iter().any(|t| t == &wire.text) {
                return Err(Attempt::Fatal(Error::RestrictionViolated { text: wire.text }));
            }
        } else if wire.text.is_empty() {
            return Err(Attempt::Fatal(Error::EmptyCompletion));
        }
        Ok(CompletionResponse {
            text: wire.text,
            finish_reason,
        })
    }
}

/// Outcome of one HTTP attempt that did not produce a completion.
enum Attempt {
    /// Worth retrying: transport failure or server-side throttling.
    Retry(String),
    /// Not worth retrying: protocol or contract violation.
    Fatal(Error),
}

fn snippet(text: &str) -> String {
    if text.chars().count() <= BODY_SNIPPET {
        text.to_string()
    } else {
        let cut: String = text.chars().take(BODY_SNIPPET).collect();
        format!("{cut}...")
    }
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        let mut last_message = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                let backoff = BACKOFF_SECONDS[(attempt - 1) as usize];
                self.clock.sleep(Duration::from_secs(backoff));
            }
            self.limiter.acquire();
            match self.send_once(request) {
                Ok(response) => return Ok(response),
                Err(Attempt::Fatal(error)) => return Err(error),
                Err(Attempt::Retry(message)) => last_message = message,
            }
        }
        Err(Error::BackendExhausted {
            attempts: MAX_ATTEMPTS,
            message: last_message,
        })
    }
}
