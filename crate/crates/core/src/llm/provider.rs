use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::Message;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("API key variable `{0}` is not set")]
    MissingKey(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider rejected the credentials (HTTP {0})")]
    Auth(u16),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    BadResponse(String),
    #[error("mock provider: {0}")]
    Script(String),
}

/// Anything that answers a chat history with the next assistant message.
pub trait Provider: Send + Sync {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError>;
}

/// Connection settings. `api_key_ref` names the environment variable that
/// holds the key; the key itself is never part of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_name: String,
    pub api_key_ref: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries_transport: u32,
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    2
}

impl ProviderConfig {
    pub fn new(endpoint: &str, model_name: &str, api_key_ref: &str) -> Self {
        ProviderConfig {
            endpoint: endpoint.to_string(),
            model_name: model_name.to_string(),
            api_key_ref: api_key_ref.to_string(),
            temperature: 0.0,
            timeout_secs: default_timeout(),
            max_retries_transport: default_retries(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        let bad = |m: String| Err(ProviderError::InvalidConfig(m));
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return bad(format!("endpoint `{}` is not an http(s) URL", self.endpoint));
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty".into());
        }
        if self.api_key_ref.trim().is_empty() {
            return bad("api_key_ref is empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} is outside [0, 2]", self.temperature));
        }
        if self.timeout_secs == 0 {
            return bad("timeout_secs must be positive".into());
        }
        Ok(())
    }
}

/// An API key. Debug output is redacted and there is no Serialize impl.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Secret(value.into())
    }

    pub fn from_env(var: &str) -> Result<Self, ProviderError> {
        match std::env::var(var) {
            Ok(v) if !v.trim().is_empty() => Ok(Secret(v.trim().to_string())),
            _ => Err(ProviderError::MissingKey(var.to_string())),
        }
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(<redacted>)")
    }
}

/// Chat-completions client: POSTs `{model, messages, temperature}` with a
/// bearer token and reads `choices[0].message.content`.
pub struct HttpProvider {
    config: ProviderConfig,
    key: Secret,
}

impl fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProvider").field("config", &self.config).finish_non_exhaustive()
    }
}

impl HttpProvider {
    pub fn new(config: ProviderConfig, key: Secret) -> Result<Self, ProviderError> {
        config.check()?;
        Ok(HttpProvider { config, key })
    }

    /// Reads the key from the variable named by `config.api_key_ref`.
    pub fn from_env(config: ProviderConfig) -> Result<Self, ProviderError> {
        let key = Secret::from_env(&config.api_key_ref)?;
        Self::new(config, key)
    }

    fn redact(&self, text: &str) -> String {
        text.replace(self.key.expose(), "<redacted>")
    }

    fn backoff(attempt: u32) -> Duration {
        Duration::from_millis(200u64 << attempt.min(5))
    }
}

impl Provider for HttpProvider {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.config.timeout())
            .build()
            .map_err(|e| ProviderError::Transport { attempts: 0, message: self.redact(&e.to_string()) })?;
        let body = json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
        });
        let attempts = self.config.max_retries_transport + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Self::backoff(attempt - 1));
            }
            let response = client
                .post(&self.config.endpoint)
                .bearer_auth(self.key.expose())
                .json(&body)
                .send();
            let response = match response {
                Ok(r) => r,
                Err(e) => {
                    last = self.redact(&e.to_string());
                    tracing::warn!(attempt, error = %last, "chat request failed");
                    continue;
                }
            };
            let status = response.status().as_u16();
            let text = response.text().unwrap_or_default();
            match status {
                200..=299 => return parse_completion(&text),
                401 | 403 => return Err(ProviderError::Auth(status)),
                429 | 500..=599 => {
                    last = format!("HTTP {status}");
                    tracing::warn!(attempt, status, "chat endpoint unavailable");
                }
                _ => {
                    let mut body = self.redact(&text);
                    body.truncate(body.floor_char_boundary(500));
                    return Err(ProviderError::Status { status, body });
                }
            }
        }
        Err(ProviderError::Transport { attempts, message: last })
    }
}

fn parse_completion(text: &str) -> Result<String, ProviderError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ProviderError::BadResponse(format!("body is not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::BadResponse("missing choices[0].message.content".into()))
}

/// Replays scripted responses in order, one per call.
#[derive(Debug, Default)]
pub struct MockProvider {
    responses: Mutex<VecDeque<String>>,
    seen: Mutex<Vec<Vec<Message>>>,
}

impl MockProvider {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        MockProvider {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
            seen: Mutex::default(),
        }
    }

    /// Reads a JSON array of response strings.
    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Script(format!("{}: {e}", path.display())))?;
        let responses: Vec<String> = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Script(format!("{}: {e}", path.display())))?;
        Ok(Self::new(responses))
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().unwrap().len()
    }

    /// The message lists received so far, one per call.
    pub fn requests(&self) -> Vec<Vec<Message>> {
        self.seen.lock().unwrap().clone()
    }
}

impl Provider for MockProvider {
    fn complete(&self, messages: &[Message]) -> Result<String, ProviderError> {
        self.seen.lock().unwrap().push(messages.to_vec());
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| ProviderError::Script("script exhausted".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves the canned `(status, body)` replies in order and reports each
    /// request's Authorization header and body.
    fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<(String, String)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut auth = String::new();
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    let lower = l.to_ascii_lowercase();
                    if lower.starts_with("authorization:") {
                        auth = l["authorization:".len()..].trim().to_string();
                    }
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut req = vec![0; len];
                reader.read_exact(&mut req).unwrap();
                tx.send((auth, String::from_utf8(req).unwrap())).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, rx)
    }

    fn ok_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn provider(url: &str, retries: u32) -> HttpProvider {
        let mut cfg = ProviderConfig::new(url, "test-model", "UNUSED_KEY_VAR");
        cfg.max_retries_transport = retries;
        cfg.timeout_secs = 5;
        HttpProvider::new(cfg, Secret::new("sk-test-123")).unwrap()
    }

    #[test]
    fn posts_chat_request_with_bearer_token() {
        let (url, rx) = serve(vec![(200, ok_body("hello"))]);
        let p = provider(&url, 0);
        let out = p.complete(&[Message::system("s"), Message::user("u")]).unwrap();
        assert_eq!(out, "hello");
        let (auth, body) = rx.recv().unwrap();
        assert_eq!(auth, "Bearer sk-test-123");
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["model"], "test-model");
        assert_eq!(v["messages"][1]["role"], "user");
        assert_eq!(v["temperature"], 0.0);
    }

    #[test]
    fn retries_server_errors() {
        let (url, rx) = serve(vec![(503, "{}".into()), (200, ok_body("second"))]);
        assert_eq!(provider(&url, 2).complete(&[Message::user("u")]).unwrap(), "second");
        assert_eq!(rx.iter().take(2).count(), 2);
    }

    #[test]
    fn gives_up_after_retries() {
        let (url, _rx) = serve(vec![(500, "{}".into()), (500, "{}".into())]);
        let err = provider(&url, 1).complete(&[Message::user("u")]).unwrap_err();
        assert!(matches!(err, ProviderError::Transport { attempts: 2, .. }), "{err}");
    }

    #[test]
    fn auth_failure_is_not_retried_and_hides_key() {
        let (url, _rx) = serve(vec![(401, "{\"error\":\"bad key sk-test-123\"}".into())]);
        let p = provider(&url, 3);
        let err = p.complete(&[Message::user("u")]).unwrap_err();
        assert_eq!(err, ProviderError::Auth(401));
        assert!(!format!("{p:?} {err}").contains("sk-test-123"));
    }

    #[test]
    fn client_errors_redact_key() {
        let (url, _rx) = serve(vec![(400, "{\"error\":\"echo sk-test-123\"}".into())]);
        let err = provider(&url, 0).complete(&[Message::user("u")]).unwrap_err();
        assert!(matches!(&err, ProviderError::Status { status: 400, body } if !body.contains("sk-test")));
    }

    #[test]
    fn connection_refused_is_transport() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let err = provider(&format!("http://127.0.0.1:{port}/x"), 1)
            .complete(&[Message::user("u")])
            .unwrap_err();
        assert!(matches!(err, ProviderError::Transport { attempts: 2, .. }));
    }

    #[test]
    fn config_rules() {
        let mut c = ProviderConfig::new("https://api.example.com/v1/chat/completions", "m", "KEY");
        assert!(c.check().is_ok());
        c.temperature = 2.5;
        assert!(c.check().is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("api_key_ref") && !json.contains("secret"));
        assert_eq!(format!("{:?}", Secret::new("abc")), "Secret(<redacted>)");
    }

    #[test]
    fn mock_replays_in_order() {
        let m = MockProvider::new(["one", "two"]);
        assert_eq!(m.complete(&[Message::user("a")]).unwrap(), "one");
        assert_eq!(m.complete(&[]).unwrap(), "two");
        assert!(matches!(m.complete(&[]), Err(ProviderError::Script(_))));
        assert_eq!(m.requests().len(), 3);
    }
}
