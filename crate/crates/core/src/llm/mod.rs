//! Model traffic: request types, fingerprinting, cassettes and the gateway
//! that routes every completion through a live, record or replay backend.

mod cassette;
mod transport;
mod types;

use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cassette::{fingerprint, Cassette, CassetteEntry, CassetteWriter};
pub use transport::{
    HttpReply, LiveClient, ReqwestTransport, Transport, WireRequest, WireResponse,
    API_BASE_VAR, API_KEY_VAR, DEFAULT_API_BASE,
};
pub use types::{
    max_tokens, ChatMessage, ChatRequest, ChatResponse, ChatRole, RateBudget, DEFAULT_MODEL,
};

use transport::Attempt;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no cassette entry for request fingerprint {0}")]
    ReplayMiss(String),
    #[error("rate limit still exceeded after {attempts} attempts")]
    RateLimitExhausted { attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication error: {0}")]
    Auth(String),
    #[error("cassette error: {0}")]
    Cassette(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Record,
    Replay,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Record => "record",
            Self::Replay => "replay",
        })
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

enum Backend {
    Live(LiveClient),
    Record {
        live: LiveClient,
        recorded: RwLock<Cassette>,
        sink: Option<Mutex<CassetteWriter>>,
    },
    Replay(Cassette),
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// The single path through which agents talk to a model.
///
/// Cheap to share behind an `Arc`; replay reads are lock-free and record
/// appends are serialized.
pub struct Gateway {
    backend: Backend,
    budget: RateBudget,
    model: String,
    sleep: Sleeper,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.kind())
            .field("budget", &self.budget)
            .field("model", &self.model)
            .finish()
    }
}

impl Gateway {
    fn with_backend(backend: Backend) -> Self {
        Self {
            backend,
            budget: RateBudget::default(),
            model: DEFAULT_MODEL.to_string(),
            sleep: Arc::new(std::thread::sleep),
        }
    }

    pub fn live(client: LiveClient) -> Self {
        Self::with_backend(Backend::Live(client))
    }

    pub fn replay(cassette: Cassette) -> Self {
        Self::with_backend(Backend::Replay(cassette)).with_budget(RateBudget::immediate(0))
    }

    /// Record into memory only; see [`Gateway::recorded`].
    pub fn record_in_memory(client: LiveClient) -> Self {
        Self::with_backend(Backend::Record {
            live: client,
            recorded: RwLock::new(Cassette::new()),
            sink: None,
        })
    }

    /// Record and append every new entry to `writer`. Entries already in the
    /// target are served without a network call.
    pub fn record(client: LiveClient, writer: CassetteWriter) -> Result<Self, LlmError> {
        let existing = writer.existing()?;
        Ok(Self::with_backend(Backend::Record {
            live: client,
            recorded: RwLock::new(existing),
            sink: Some(Mutex::new(writer)),
        }))
    }

    pub fn with_budget(mut self, budget: RateBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    /// Replaces the backoff sleep, e.g. to observe delays in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn kind(&self) -> BackendKind {
        match self.backend {
            Backend::Live(_) => BackendKind::Live,
            Backend::Record { .. } => BackendKind::Record,
            Backend::Replay(_) => BackendKind::Replay,
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Builds a request for this gateway's model at temperature 0.
    pub fn request(&self, messages: Vec<ChatMessage>, max_tokens: u32) -> ChatRequest {
        ChatRequest::new(messages, max_tokens).with_model(self.model.clone())
    }

    /// Snapshot of everything recorded so far (record backend only).
    pub fn recorded(&self) -> Option<Cassette> {
        match &self.backend {
            Backend::Record { recorded, .. } => {
                Some(recorded.read().expect("cassette lock").clone())
            }
            _ => None,
        }
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        match &self.backend {
            Backend::Replay(cassette) => cassette
                .lookup(request)
                .cloned()
                .ok_or_else(|| LlmError::ReplayMiss(fingerprint(request))),
            Backend::Live(client) => self.complete_live(client, request),
            Backend::Record {
                live,
                recorded,
                sink,
            } => {
                if let Some(hit) = recorded.read().expect("cassette lock").lookup(request) {
                    return Ok(hit.clone());
                }
                let response = self.complete_live(live, request)?;
                let mut cassette = recorded.write().expect("cassette lock");
                if cassette.lookup(request).is_none() {
                    let key = cassette.insert(request.clone(), response.clone());
                    if let Some(sink) = sink {
                        let entry = cassette.get(&key).expect("just inserted");
                        sink.lock().expect("sink lock").append(&key, entry)?;
                    }
                }
                Ok(response)
            }
        }
    }

    fn complete_live(
        &self,
        client: &LiveClient,
        request: &ChatRequest,
    ) -> Result<ChatResponse, LlmError> {
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            match client.attempt(request)? {
                Attempt::Done(response) => return Ok(response),
                Attempt::RateLimited if attempts > self.budget.max_retries => {
                    return Err(LlmError::RateLimitExhausted { attempts });
                }
                Attempt::RateLimited => {
                    let wait = self.budget.backoff_ms(attempts - 1);
                    if wait > 0 {
                        (self.sleep)(Duration::from_millis(wait));
                    }
                }
            }
        }
    }
}
