//! Chat-completion clients shared by enrichment and the agent driver.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const ENV_BASE_URL: &str = "ACE_LLM_BASE_URL";
pub const ENV_MODEL: &str = "ACE_LLM_MODEL";
pub const ENV_API_KEY: &str = "ACE_LLM_API_KEY";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("malformed chat response: {0}")]
    BadResponse(String),
    #[error("missing configuration: {0}")]
    Config(String),
}

/// A chat-completion backend. Implementations must tolerate concurrent calls.
pub trait ChatClient: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, messages: &[ChatMessage], temperature: f32) -> Result<String, ChatError>;
}

/// Delays slept between attempts; `delays.len()` is the number of retries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub delays: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            delays: [1, 2, 4].map(Duration::from_secs).to_vec(),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self { delays: Vec::new() }
    }

    /// Runs `op` until it succeeds, returns a non-retryable error, or the
    /// retries are used up.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, Attempt>,
    ) -> Result<T, ChatError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match op() {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => match self.delays.get(attempts - 1) {
                    Some(delay) => {
                        log::warn!("chat attempt {attempts} failed: {message}; retrying in {delay:?}");
                        thread::sleep(*delay);
                    }
                    None => return Err(ChatError::Transport { attempts, message }),
                },
            }
        }
    }
}

/// Outcome of a single failed attempt.
#[derive(Debug)]
pub enum Attempt {
    Retry(String),
    Fatal(ChatError),
}

/// Client for an OpenAI-compatible `/chat/completions` route.
pub struct HttpChatClient {
    base_url: String,
    model: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .new_agent();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            retry: RetryPolicy::default(),
            agent,
        }
    }

    /// Reads `ACE_LLM_BASE_URL`, `ACE_LLM_MODEL` and the optional `ACE_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, ChatError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let base = var(ENV_BASE_URL).ok_or_else(|| ChatError::Config(ENV_BASE_URL.into()))?;
        let model = var(ENV_MODEL).ok_or_else(|| ChatError::Config(ENV_MODEL.into()))?;
        Ok(Self::new(base, model, var(ENV_API_KEY)))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let url = format!("{}/chat/completions", self.base_url);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if status >= 400 {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(ChatError::Transport {
                attempts: 1,
                message: format!("HTTP {status}: {text}"),
            }));
        }
        let payload: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(ChatError::BadResponse(e.to_string())))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fatal(ChatError::BadResponse(payload.to_string())))
    }
}

impl ChatClient for HttpChatClient {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, messages: &[ChatMessage], temperature: f32) -> Result<String, ChatError> {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
        });
        self.retry.run(|| self.attempt(&body))
    }
}

/// Replays canned replies in order; once exhausted it answers
/// `Final Answer: done`.
pub struct ScriptedChat {
    model: String,
    replies: Mutex<VecDeque<String>>,
}

impl ScriptedChat {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            model: "scripted".into(),
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("poisoned").len()
    }
}

impl ChatClient for ScriptedChat {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, _: &[ChatMessage], _: f32) -> Result<String, ChatError> {
        let next = self.replies.lock().expect("poisoned").pop_front();
        Ok(next.unwrap_or_else(|| "Final Answer: done".into()))
    }
}

/// Answers by calling a closure on the conversation so far.
pub struct FnChat<F> {
    model: String,
    f: F,
}

impl<F> FnChat<F>
where
    F: Fn(&[ChatMessage]) -> Result<String, ChatError> + Send + Sync,
{
    pub fn new(model: impl Into<String>, f: F) -> Self {
        Self { model: model.into(), f }
    }
}

impl<F> ChatClient for FnChat<F>
where
    F: Fn(&[ChatMessage]) -> Result<String, ChatError> + Send + Sync,
{
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, messages: &[ChatMessage], _: f32) -> Result<String, ChatError> {
        (self.f)(messages)
    }
}
