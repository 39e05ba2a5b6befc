use serde::{Deserialize, Serialize};

use super::LlmError;

/// Model identifier used when a run does not override it.
pub const DEFAULT_MODEL: &str = "gpt-4-0613";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

impl ChatRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ChatRole::System => "system",
            ChatRole::User => "user",
            ChatRole::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: ChatRole, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(ChatRole::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(ChatRole::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(ChatRole::Assistant, content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// Builds a request with the default model and temperature 0.
    pub fn new(messages: Vec<ChatMessage>, max_tokens: u32) -> Self {
        Self {
            model: DEFAULT_MODEL.to_string(),
            messages,
            temperature: 0.0,
            max_tokens,
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.model.trim().is_empty() {
            return Err(LlmError::InvalidRequest("model identifier is empty".into()));
        }
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("request has no messages".into()));
        }
        if let Some(i) = self
            .messages
            .iter()
            .position(|m| m.content.trim().is_empty())
        {
            return Err(LlmError::InvalidRequest(format!(
                "message {i} has empty content"
            )));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Content of the last user message, if any.
    pub fn last_user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == ChatRole::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Retry policy for rate-limited calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateBudget {
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub jitter: bool,
}

impl Default for RateBudget {
    fn default() -> Self {
        Self {
            max_retries: 5,
            backoff_base_ms: 1_000,
            jitter: true,
        }
    }
}

impl RateBudget {
    /// No sleeping and no jitter; for tests and replay runs.
    pub fn immediate(max_retries: u32) -> Self {
        Self {
            max_retries,
            backoff_base_ms: 0,
            jitter: false,
        }
    }

    /// Backoff before retry number `attempt` (0-based): base * 2^attempt, plus
    /// up to one base of jitter when enabled.
    pub fn backoff_ms(&self, attempt: u32) -> u64 {
        let exp = self
            .backoff_base_ms
            .saturating_mul(1u64 << attempt.min(16));
        if self.jitter && self.backoff_base_ms > 0 {
            exp + rand::random::<u64>() % self.backoff_base_ms
        } else {
            exp
        }
    }
}

/// Per-stage token limits. The temperature for every stage is 0.
pub mod max_tokens {
    pub const GOAL_METRIC: u32 = 512;
    pub const PROGRAMMER: u32 = 768;
    pub const DISCIPLINES: u32 = 256;
    pub const EXPERTS: u32 = 512;
    pub const PANEL: u32 = 128;
    pub const STAGE1: u32 = 2048;
    pub const STAGE2: u32 = 1024;
    pub const STAGE3: u32 = 1536;
    pub const RANKING: u32 = 512;
    pub const JUDGE: u32 = 256;
    pub const VANILLA: u32 = 1536;
}
