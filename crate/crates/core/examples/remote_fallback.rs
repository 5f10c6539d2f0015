//! Points the remote provider at an address nobody listens on and shows the
//! session carrying on with template text.
//!
//! cargo run -p feedscout --example remote_fallback
//!
//! With a real endpoint, set PROVIDER_MODE=remote plus REMOTE_BASE_URL,
//! REMOTE_MODEL, REMOTE_API_KEY and optionally REMOTE_TIMEOUT_MS, and build
//! the provider with `provider_from_env` instead.

use std::sync::Arc;

use feedscout::corpus::StandardFeed;
use feedscout::event_log::EventData;
use feedscout::harness::{simulate_session, SimOptions};
use feedscout::provider::{RemoteConfig, RemoteProvider};
use feedscout::{Condition, Corpus};

fn main() -> feedscout::Result<()> {
    let mut config = RemoteConfig::new("http://127.0.0.1:9", "any-model");
    config.timeout_ms = 500;
    let categories = Corpus::synthetic(7).category_ids();
    let opts = SimOptions::new(Arc::new(RemoteProvider::new(config, categories)));
    let (session, outcome) = simulate_session("offline", None, Condition::AiInit, StandardFeed::C, 5, &opts)?;
    for e in session.events() {
        match &e.data {
            EventData::ProviderFallback { request, reason } => {
                println!("{:>7} ms  fallback for {request:?}: {reason}", e.t_ms)
            }
            EventData::DialogueTurn { turn, text, .. } => println!("{:>7} ms  {turn:?}: {text}", e.t_ms),
            _ => {}
        }
    }
    println!("\nsession finished; engaged = {:?}", outcome.metrics.tool_engaged_first_5min);
    Ok(())
}
