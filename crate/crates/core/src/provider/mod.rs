//! Text and option generation for the assistant.
//!
//! Providers only propose: they return text, options and directions, and
//! never touch feed or dialogue state. [`ask`] wraps any provider with
//! validation and falls back to the [`TemplateProvider`] on failure.

mod remote;
mod template;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use remote::{RemoteConfig, RemoteProvider};
pub use template::{map_free_text, TemplateProvider};

use crate::analysis::InsightReport;
use crate::dialogue::{Direction, ExplorationOption};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    #[default]
    Template,
    Remote,
}

impl ProviderMode {
    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "template" => Ok(ProviderMode::Template),
            "remote" => Ok(ProviderMode::Remote),
            other => Err(Error::Validation(format!("unknown provider mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderTag {
    Template,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    InsightText,
    OptionSet,
    NarrowingSet,
    MapFreeText,
    ConfirmationText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ProviderRequest {
    InsightText { report: InsightReport },
    OptionSet { report: InsightReport },
    NarrowingSet { option: ExplorationOption },
    MapFreeText { text: String, categories: Vec<String> },
    ConfirmationText { direction: Direction },
}

impl ProviderRequest {
    pub fn kind(&self) -> RequestKind {
        match self {
            ProviderRequest::InsightText { .. } => RequestKind::InsightText,
            ProviderRequest::OptionSet { .. } => RequestKind::OptionSet,
            ProviderRequest::NarrowingSet { .. } => RequestKind::NarrowingSet,
            ProviderRequest::MapFreeText { .. } => RequestKind::MapFreeText,
            ProviderRequest::ConfirmationText { .. } => RequestKind::ConfirmationText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub options: Option<Vec<ExplorationOption>>,
    pub direction: Option<Direction>,
    pub provider_tag: ProviderTag,
}

pub trait Provider: Send + Sync {
    fn generate(&self, request: &ProviderRequest) -> Result<ProviderResponse>;
}

/// Result of [`ask`]: the response actually used, and the reason a fallback
/// was needed if there was one.
#[derive(Debug, Clone)]
pub struct Asked {
    pub response: ProviderResponse,
    pub fallback: Option<String>,
}

/// Asks `provider`, validates the answer, and substitutes the template
/// provider's answer when either step fails.
pub fn ask(provider: &dyn Provider, request: &ProviderRequest, categories: &[String]) -> Asked {
    let attempt = provider
        .generate(request)
        .and_then(|resp| validate_response(request.kind(), &resp, categories).map(|_| resp));
    match attempt {
        Ok(response) => Asked {
            response,
            fallback: None,
        },
        Err(e) => {
            tracing::warn!(kind = ?request.kind(), error = %e, "provider failed, using template");
            Asked {
                response: TemplateProvider
                    .generate(request)
                    .expect("template provider is infallible"),
                fallback: Some(e.to_string()),
            }
        }
    }
}

/// Checks a response against the structural rules for its request kind.
pub fn validate_response(kind: RequestKind, resp: &ProviderResponse, categories: &[String]) -> Result<()> {
    let invalid = |msg: String| Err(Error::Validation(msg));
    match kind {
        RequestKind::OptionSet => match &resp.options {
            Some(opts) if (3..=4).contains(&opts.len()) => validate_options(opts, categories)?,
            Some(opts) => return invalid(format!("expected 3-4 options, got {}", opts.len())),
            None => return invalid("option set without options".into()),
        },
        RequestKind::NarrowingSet => {
            if let Some(opts) = &resp.options {
                if !opts.is_empty() && !(2..=4).contains(&opts.len()) {
                    return invalid(format!("expected 2-4 refinements, got {}", opts.len()));
                }
                validate_options(opts, categories)?;
            }
        }
        RequestKind::MapFreeText => {
            if let Some(d) = &resp.direction {
                d.validate(categories)?;
            }
        }
        RequestKind::InsightText | RequestKind::ConfirmationText => {}
    }
    if resp.text.trim().is_empty() {
        return invalid("empty text".into());
    }
    Ok(())
}

fn validate_options(opts: &[ExplorationOption], categories: &[String]) -> Result<()> {
    let mut ids = BTreeSet::new();
    for o in opts {
        if o.label.trim().is_empty() || o.option_id.trim().is_empty() {
            return Err(Error::Validation("option with empty id or label".into()));
        }
        if !ids.insert(o.option_id.as_str()) {
            return Err(Error::Validation(format!("duplicate option id `{}`", o.option_id)));
        }
        o.direction.validate(categories)?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResponse {
    text: String,
    #[serde(default)]
    options: Option<Vec<ExplorationOption>>,
    #[serde(default)]
    direction: Option<Direction>,
}

/// Parses a remote model's JSON answer and validates it for `kind`.
pub fn validate_structured(raw: &str, kind: RequestKind, categories: &[String]) -> Result<ProviderResponse> {
    let body = strip_code_fence(raw);
    let parsed: RawResponse =
        serde_json::from_str(body).map_err(|e| Error::Validation(format!("malformed provider output: {e}")))?;
    let resp = ProviderResponse {
        text: parsed.text,
        options: parsed.options,
        direction: parsed.direction,
        provider_tag: ProviderTag::Remote,
    };
    validate_response(kind, &resp, categories)?;
    Ok(resp)
}

fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    match t.strip_prefix("```") {
        Some(rest) => {
            let rest = rest.trim_start_matches("json");
            rest.strip_suffix("```").unwrap_or(rest).trim()
        }
        None => t,
    }
}

/// Builds the provider selected by `PROVIDER_MODE` (default `template`).
pub fn provider_from_env(categories: &[String]) -> Result<Arc<dyn Provider>> {
    let mode = match std::env::var("PROVIDER_MODE") {
        Ok(v) => ProviderMode::parse(&v)?,
        Err(_) => ProviderMode::Template,
    };
    build_provider(mode, categories)
}

pub fn build_provider(mode: ProviderMode, categories: &[String]) -> Result<Arc<dyn Provider>> {
    Ok(match mode {
        ProviderMode::Template => Arc::new(TemplateProvider),
        ProviderMode::Remote => Arc::new(RemoteProvider::new(RemoteConfig::from_env()?, categories.to_vec())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats() -> Vec<String> {
        ["food", "travel", "fashion"].map(String::from).to_vec()
    }

    fn option_json(id: &str, cat: &str) -> String {
        format!(
            r#"{{"option_id":"{id}","label":"More {cat}","kind":"custom","direction":{{"mode":"increase","target_categories":["{cat}"],"refinement":null}}}}"#
        )
    }

    fn option_set(n: usize, cat: &str) -> String {
        let opts: Vec<String> = (0..n).map(|i| option_json(&format!("o{i}"), cat)).collect();
        format!(r#"{{"text":"Pick one","options":[{}]}}"#, opts.join(","))
    }

    #[test]
    fn accepts_three_option_set() {
        let resp = validate_structured(&option_set(3, "travel"), RequestKind::OptionSet, &cats()).unwrap();
        assert_eq!(resp.options.unwrap().len(), 3);
        assert_eq!(resp.provider_tag, ProviderTag::Remote);
    }

    #[test]
    fn rejects_five_options_and_unknown_category() {
        assert!(validate_structured(&option_set(5, "travel"), RequestKind::OptionSet, &cats()).is_err());
        assert!(validate_structured(&option_set(3, "sports"), RequestKind::OptionSet, &cats()).is_err());
    }

    #[test]
    fn rejects_duplicate_ids_and_garbage() {
        let dup = format!(
            r#"{{"text":"x","options":[{},{},{}]}}"#,
            option_json("a", "food"),
            option_json("a", "food"),
            option_json("b", "food")
        );
        assert!(validate_structured(&dup, RequestKind::OptionSet, &cats()).is_err());
        assert!(validate_structured("I think you like travel", RequestKind::InsightText, &cats()).is_err());
    }

    #[test]
    fn fenced_json_is_accepted() {
        let raw = "```json\n{\"text\":\"Your feed is mostly food.\"}\n```";
        assert!(validate_structured(raw, RequestKind::InsightText, &cats()).is_ok());
    }
}
