//! Completion backends: the request/response contract, a deterministic
//! offline simulator, and a generic HTTP/JSON remote client.
//!
//! Every consumer in this crate talks to [`CompletionBackend`] and never to
//! a concrete engine, so experiments can run fully offline and tests can
//! count or script calls.

mod ratelimit;
mod remote;
mod simulated;

pub use ratelimit::{Clock, RateLimiter, SystemClock};
pub use remote::RemoteBackend;
pub use simulated::SimulatedBackend;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::estimate_tokens;

/// Hard cap on prompt size, in estimated tokens.
pub const MAX_PROMPT_TOKENS: usize = 2048;

/// A single completion call.
///
/// Construction enforces the wire preconditions, so a request that exists
/// is a request any backend will accept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    prompt: String,
    max_tokens: usize,
    temperature: f64,
    allowed_tokens: Option<Vec<String>>,
    stop_sequences: Option<Vec<String>>,
}

impl CompletionRequest {
    /// Build a request, checking the prompt budget and parameter ranges.
    pub fn new(
        prompt: impl Into<String>,
        max_tokens: usize,
        temperature: f64,
        allowed_tokens: Option<Vec<String>>,
        stop_sequences: Option<Vec<String>>,
    ) -> Result<Self> {
        let prompt = prompt.into();
        let estimated = estimate_tokens(&prompt);
        if estimated > MAX_PROMPT_TOKENS {
            return Err(Error::TokenBudget {
                estimated,
                limit: MAX_PROMPT_TOKENS,
            });
        }
        if max_tokens == 0 {
            return Err(Error::InvalidRequest("max_tokens must be positive".into()));
        }
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(Error::InvalidRequest(format!(
                "temperature must be a finite non-negative number, got {temperature}"
            )));
        }
        if let Some(tokens) = &allowed_tokens {
            if tokens.is_empty() {
                return Err(Error::InvalidRequest(
                    "allowed_tokens, when present, must be non-empty".into(),
                ));
            }
        }
        Ok(CompletionRequest {
            prompt,
            max_tokens,
            temperature,
            allowed_tokens,
            stop_sequences,
        })
    }

    /// An unrestricted text-generation request.
    pub fn generation(prompt: impl Into<String>, max_tokens: usize, temperature: f64) -> Result<Self> {
        CompletionRequest::new(prompt, max_tokens, temperature, None, None)
    }

    /// A request whose output is restricted to one of `allowed_tokens`.
    pub fn restricted(
        prompt: impl Into<String>,
        temperature: f64,
        allowed_tokens: Vec<String>,
    ) -> Result<Self> {
        CompletionRequest::new(prompt, 1, temperature, Some(allowed_tokens), None)
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn allowed_tokens(&self) -> Option<&[String]> {
        self.allowed_tokens.as_deref()
    }

    pub fn stop_sequences(&self) -> Option<&[String]> {
        self.stop_sequences.as_deref()
    }
}

/// Why a completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    /// Natural end of the completion (or a stop sequence).
    Stop,
    /// Output was truncated at max_tokens.
    Length,
    /// Output was forced to a member of the restricted token set.
    Restricted,
}

/// The result of a completion call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub finish_reason: FinishReason,
}

/// Which backend implementation a config selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Simulated,
    Remote,
}

/// Declarative backend selection, suitable for configs and manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Engine tag recorded with runs, e.g. "ada" or "davinci". The
    /// simulator ignores it; the remote client forwards it.
    pub engine: String,
    pub endpoint_url: Option<String>,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    /// Maximum requests per trailing second for the remote client.
    pub rate_limit: u32,
    /// RNG seed for the simulator.
    pub seed: Option<u64>,
}

impl BackendConfig {
    /// An offline simulator config with the given seed.
    pub fn simulated(seed: u64) -> Self {
        BackendConfig {
            kind: BackendKind::Simulated,
            engine: "ada".into(),
            endpoint_url: None,
            api_key_env: None,
            rate_limit: 10,
            seed: Some(seed),
        }
    }

    /// A remote HTTP backend config.
    pub fn remote(endpoint_url: impl Into<String>, engine: impl Into<String>) -> Self {
        BackendConfig {
            kind: BackendKind::Remote,
            engine: engine.into(),
            endpoint_url: Some(endpoint_url.into()),
            api_key_env: None,
            rate_limit: 10,
            seed: None,
        }
    }

    pub fn with_api_key_env(mut self, var: impl Into<String>) -> Self {
        self.api_key_env = Some(var.into());
        self
    }

    pub fn with_rate_limit(mut self, per_second: u32) -> Self {
        self.rate_limit = per_second;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            BackendKind::Simulated => {
                if self.seed.is_none() {
                    return Err(Error::InvalidBackendConfig(
                        "simulated backend requires a seed".into(),
                    ));
                }
            }
            BackendKind::Remote => {
                match self.endpoint_url.as_deref() {
                    None | Some("") => {
                        return Err(Error::InvalidBackendConfig(
                            "remote backend requires an endpoint_url".into(),
                        ))
                    }
                    Some(_) => {}
                }
                if self.rate_limit == 0 {
                    return Err(Error::InvalidBackendConfig(
                        "remote backend requires rate_limit >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Instantiate the backend this config describes.
    pub fn build(&self) -> Result<Box<dyn CompletionBackend>> {
        self.validate()?;
        match self.kind {
            BackendKind::Simulated => Ok(Box::new(SimulatedBackend::new(
                self.seed.expect("validated"),
            ))),
            BackendKind::Remote => Ok(Box::new(RemoteBackend::from_config(self)?)),
        }
    }
}

/// A completion engine. Implementations must be safe to call from multiple
/// threads; the simulator is a pure function and the remote client
/// serializes through its rate limiter.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        (**self).complete(request)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        (**self).complete(request)
    }
}

/// One-shot completion against a config-described backend.
pub fn complete(config: &BackendConfig, request: &CompletionRequest) -> Result<CompletionResponse> {
    config.build()?.complete(request)
}

/// Wrapper that counts completed calls, for call budgets and tests.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicU64,
}

impl<B> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    /// Number of calls forwarded so far, including failed ones.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<B: CompletionBackend> CompletionBackend for CountingBackend<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(request)
    }
}
