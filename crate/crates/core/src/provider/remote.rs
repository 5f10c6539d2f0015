use std::time::Duration;

use serde_json::json;

use crate::error::{Error, Result};

use super::{validate_structured, Provider, ProviderRequest, ProviderResponse, RequestKind};

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    /// Base address; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout_ms: u64,
}

impl RemoteConfig {
    pub const DEFAULT_TIMEOUT_MS: u64 = 5000;

    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout_ms: Self::DEFAULT_TIMEOUT_MS,
        }
    }

    /// Reads `REMOTE_BASE_URL` (required), `REMOTE_MODEL`, `REMOTE_API_KEY`
    /// and `REMOTE_TIMEOUT_MS`.
    pub fn from_env() -> Result<Self> {
        let base_url = std::env::var("REMOTE_BASE_URL")
            .map_err(|_| Error::Validation("REMOTE_BASE_URL is not set".into()))?;
        let timeout_ms = match std::env::var("REMOTE_TIMEOUT_MS") {
            Ok(v) => v
                .parse()
                .map_err(|_| Error::Validation(format!("REMOTE_TIMEOUT_MS `{v}` is not a number")))?,
            Err(_) => Self::DEFAULT_TIMEOUT_MS,
        };
        Ok(Self {
            base_url,
            model: std::env::var("REMOTE_MODEL").unwrap_or_else(|_| "default".into()),
            api_key: std::env::var("REMOTE_API_KEY").ok().filter(|k| !k.is_empty()),
            timeout_ms,
        })
    }
}

/// Calls an OpenAI-style `/chat/completions` endpoint and validates the
/// JSON it returns. Each request is tried twice before giving up.
pub struct RemoteProvider {
    config: RemoteConfig,
    categories: Vec<String>,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig, categories: Vec<String>) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .expect("http client builds");
        Self {
            config,
            categories,
            client,
        }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn call_once(&self, request: &ProviderRequest) -> Result<ProviderResponse> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": instructions(request.kind(), &self.categories)},
                {"role": "user", "content": serde_json::to_string(request).expect("requests serialize")},
            ],
        });
        let mut req = self
            .client
            .post(self.endpoint())
            .header("content-type", "application/json")
            .body(body.to_string());
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Error::Provider(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Error::Provider(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Provider(format!("remote returned {status}")));
        }
        let envelope: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Provider(format!("bad envelope: {e}")))?;
        let content = envelope["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Error::Provider("response has no message content".into()))?;
        validate_structured(content, request.kind(), &self.categories)
    }
}

impl Provider for RemoteProvider {
    fn generate(&self, request: &ProviderRequest) -> Result<ProviderResponse> {
        match self.call_once(request) {
            Ok(resp) => Ok(resp),
            Err(first) => {
                tracing::debug!(error = %first, "remote provider failed, retrying once");
                self.call_once(request)
            }
        }
    }
}

fn instructions(kind: RequestKind, categories: &[String]) -> String {
    let schema = "Reply with one JSON object: {\"text\": string, \"options\": [option] | null, \"direction\": direction | null}. \
An option is {\"option_id\": string, \"label\": string, \"kind\": \"pursue_signal\"|\"reduce_dominant\"|\"surprise\"|\"custom\", \"direction\": direction}. \
A direction is {\"mode\": \"increase\"|\"decrease\"|\"surprise\", \"target_categories\": [category id], \"refinement\": string | null}; surprise has no targets.";
    let task = match kind {
        RequestKind::InsightText => "Write one or two friendly sentences describing the feed composition in the report, naming the dominant categories with their combined share and any latent interest.",
        RequestKind::OptionSet => "Offer 3 or 4 options: one per latent signal to pursue (at most two), at least one to reduce a dominant category, and exactly one surprise option.",
        RequestKind::NarrowingSet => "Ask one short clarifying question and offer 2 to 4 refinements of the chosen option, each with a refinement token.",
        RequestKind::MapFreeText => "Map the user's message to a direction if it names something to see more or less of, or asks for novelty. Otherwise set direction to null and ask one open clarifying question in text.",
        RequestKind::ConfirmationText => "Confirm in one or two sentences that the feed will start blending toward the direction, and invite the user to keep scrolling.",
    };
    format!(
        "You help someone explore beyond their usual recommendation feed. {task} {schema} Valid category ids: {}.",
        categories.join(", ")
    )
}
