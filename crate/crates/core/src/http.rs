//! Blocking JSON-over-HTTP calls with bounded exponential backoff.

use std::thread;
use std::time::Duration;

use log::warn;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            initial_backoff: Duration::from_secs(1),
            timeout: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): 1x, 2x, 4x, ...
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpFailure {
    /// `None` when no response arrived at all.
    pub status: Option<u16>,
    pub message: String,
    pub attempts: u32,
}

impl HttpFailure {
    pub fn is_auth(&self) -> bool {
        matches!(self.status, Some(401 | 403))
    }
}

fn retryable(status: Option<u16>) -> bool {
    match status {
        None => true,
        Some(code) => code == 408 || code == 429 || (500..600).contains(&code),
    }
}

/// Reads a bearer token from `env_var`, if set and non-empty.
pub fn bearer_from_env(env_var: &str) -> Option<String> {
    std::env::var(env_var).ok().filter(|v| !v.is_empty())
}

/// POSTs `body` and parses the response as JSON.
///
/// Transport errors, 408, 429 and 5xx responses are retried per `policy`.
/// Authentication and other client errors fail immediately.
pub fn post_json(
    client: &reqwest::blocking::Client,
    url: &str,
    bearer: Option<&str>,
    body: &Value,
    policy: &RetryPolicy,
) -> Result<Value, HttpFailure> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        let result = send_once(client, url, bearer, body, policy.timeout);
        match result {
            Ok(value) => return Ok(value),
            Err((status, message)) => {
                if attempt > policy.max_retries || !retryable(status) {
                    return Err(HttpFailure {
                        status,
                        message,
                        attempts: attempt,
                    });
                }
                let delay = policy.backoff(attempt);
                warn!("{url}: attempt {attempt} failed ({message}); retrying in {delay:?}");
                thread::sleep(delay);
            }
        }
    }
}

fn send_once(
    client: &reqwest::blocking::Client,
    url: &str,
    bearer: Option<&str>,
    body: &Value,
    timeout: Duration,
) -> Result<Value, (Option<u16>, String)> {
    let mut request = client.post(url).timeout(timeout).json(body);
    if let Some(token) = bearer {
        request = request.bearer_auth(token);
    }
    let response = request.send().map_err(|e| (e.status().map(|s| s.as_u16()), e.to_string()))?;
    let status = response.status();
    let text = response
        .text()
        .map_err(|e| (Some(status.as_u16()), e.to_string()))?;
    if !status.is_success() {
        let snippet: String = text.chars().take(200).collect();
        return Err((Some(status.as_u16()), format!("HTTP {}: {snippet}", status.as_u16())));
    }
    // a body that is not JSON is a content error and never retried
    serde_json::from_str(&text).map_err(|e| (Some(status.as_u16()), format!("invalid JSON response: {e}")))
}
