use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatMessage, ChatRequest, ChatResponse, LlmError};

pub const API_KEY_VAR: &str = "GEMS_API_KEY";
pub const API_BASE_VAR: &str = "GEMS_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Minimal HTTP surface the live backend needs. Swappable so the wire
/// protocol can be exercised without a network.
pub trait Transport: Send + Sync {
    /// POSTs a JSON body with a bearer token. `Err` means no HTTP reply at all.
    fn post_json(&self, url: &str, bearer: &str, body: &str) -> Result<HttpReply, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &str) -> Result<HttpReply, String> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

/// Request body in the chat-completions wire format.
#[derive(Debug, Serialize, Deserialize)]
pub struct WireRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl From<&ChatRequest> for WireRequest {
    fn from(r: &ChatRequest) -> Self {
        Self {
            model: r.model.clone(),
            messages: r.messages.clone(),
            temperature: r.temperature,
            max_tokens: r.max_tokens,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WireResponse {
    pub choices: Vec<WireChoice>,
    #[serde(default)]
    pub usage: Option<WireUsage>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WireChoice {
    pub message: WireMessage,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WireMessage {
    #[serde(default)]
    pub role: Option<String>,
    #[serde(default)]
    pub content: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct WireUsage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

impl WireResponse {
    pub fn from_content(content: &str, prompt_tokens: u64, completion_tokens: u64) -> Self {
        Self {
            choices: vec![WireChoice {
                message: WireMessage {
                    role: Some("assistant".into()),
                    content: Some(content.to_string()),
                },
            }],
            usage: Some(WireUsage {
                prompt_tokens,
                completion_tokens,
            }),
        }
    }
}

/// One live chat-completions endpoint.
#[derive(Clone)]
pub struct LiveClient {
    base: String,
    api_key: Option<String>,
    transport: Arc<dyn Transport>,
}

impl std::fmt::Debug for LiveClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveClient")
            .field("base", &self.base)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

/// Outcome of a single HTTP attempt.
pub(crate) enum Attempt {
    Done(ChatResponse),
    RateLimited,
}

impl LiveClient {
    pub fn new(
        base: impl Into<String>,
        api_key: Option<String>,
        transport: Arc<dyn Transport>,
    ) -> Self {
        Self {
            base: base.into(),
            api_key: api_key.filter(|k| !k.trim().is_empty()),
            transport,
        }
    }

    /// Reads `GEMS_API_KEY` and `GEMS_API_BASE` and uses the reqwest transport.
    pub fn from_env() -> Result<Self, LlmError> {
        let base = std::env::var(API_BASE_VAR).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        let key = std::env::var(API_KEY_VAR).ok();
        let transport = ReqwestTransport::new(Duration::from_secs(300))?;
        Ok(Self::new(base, key, Arc::new(transport)))
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base.trim_end_matches('/'))
    }

    pub(crate) fn api_key(&self) -> Result<&str, LlmError> {
        self.api_key
            .as_deref()
            .ok_or_else(|| LlmError::Auth(format!("{API_KEY_VAR} is not set")))
    }

    pub(crate) fn attempt(&self, request: &ChatRequest) -> Result<Attempt, LlmError> {
        let key = self.api_key()?;
        let body = serde_json::to_string(&WireRequest::from(request))
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let reply = self
            .transport
            .post_json(&self.endpoint(), key, &body)
            .map_err(LlmError::Transport)?;
        match reply.status {
            200..=299 => parse_reply(&reply.body).map(Attempt::Done),
            429 => Ok(Attempt::RateLimited),
            401 | 403 => Err(LlmError::Auth(format!(
                "status {}: {}",
                reply.status,
                truncate(&reply.body)
            ))),
            s => Err(LlmError::Transport(format!(
                "status {s}: {}",
                truncate(&reply.body)
            ))),
        }
    }
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn parse_reply(body: &str) -> Result<ChatResponse, LlmError> {
    let wire: WireResponse = serde_json::from_str(body)
        .map_err(|e| LlmError::Transport(format!("malformed completion body: {e}")))?;
    let content = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .unwrap_or_default();
    if content.trim().is_empty() {
        return Err(LlmError::Transport("completion has empty content".into()));
    }
    let usage = wire.usage.unwrap_or_default();
    Ok(ChatResponse {
        content,
        prompt_tokens: usage.prompt_tokens,
        completion_tokens: usage.completion_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_wire_reply() {
        let body = serde_json::to_string(&WireResponse::from_content("hi", 3, 1)).unwrap();
        let r = parse_reply(&body).unwrap();
        assert_eq!(r.content, "hi");
        assert_eq!((r.prompt_tokens, r.completion_tokens), (3, 1));
    }

    #[test]
    fn empty_content_is_an_error() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"  "}}]}"#;
        assert!(matches!(parse_reply(body), Err(LlmError::Transport(_))));
    }

    #[test]
    fn endpoint_joins_base() {
        struct Never;
        impl Transport for Never {
            fn post_json(&self, _: &str, _: &str, _: &str) -> Result<HttpReply, String> {
                Err("unreachable".into())
            }
        }
        let c = LiveClient::new("http://h/", None, Arc::new(Never));
        assert_eq!(c.endpoint(), "http://h/v1/chat/completions");
    }
}
