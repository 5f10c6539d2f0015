use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;
use feedscout::event_log::CorpusSource;
use feedscout::harness::SessionPlan;
use feedscout::provider::{build_provider, Provider, ProviderMode};
use feedscout::session::Notification;
use feedscout::{Corpus, EngineConfig, Session};
use serde::Serialize;
use tokio::sync::broadcast;

use crate::error::ApiError;

/// Server-wide settings.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub engine: EngineConfig,
    pub corpus: CorpusSource,
    /// Directory for per-session log files; logs stay in memory when absent.
    pub log_dir: Option<PathBuf>,
    pub max_sessions: usize,
    /// A study plan sessions can be created from.
    pub plan: Option<Vec<SessionPlan>>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            corpus: CorpusSource::Synthetic { size: 320, seed: 7 },
            log_dir: None,
            max_sessions: 256,
            plan: None,
        }
    }
}

/// The provider mode from `PROVIDER_MODE` if set, else the configured one.
pub fn provider_mode(config: &EngineConfig) -> feedscout::Result<ProviderMode> {
    match std::env::var("PROVIDER_MODE") {
        Ok(v) if !v.is_empty() => ProviderMode::parse(&v),
        _ => Ok(config.provider),
    }
}

/// A pushed notification with its position in the session's history.
#[derive(Debug, Clone, Serialize)]
pub struct Pushed {
    pub index: usize,
    #[serde(flatten)]
    pub notification: Notification,
}

pub struct LiveSession {
    pub session: Mutex<Session>,
    pub created_ms: u64,
    pub created: Instant,
    pub history: Mutex<Vec<Notification>>,
    pub push: broadcast::Sender<Pushed>,
}

impl LiveSession {
    pub fn new(session: Session) -> Self {
        let (push, _) = broadcast::channel(64);
        Self {
            session: Mutex::new(session),
            created_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            created: Instant::now(),
            history: Mutex::new(Vec::new()),
            push,
        }
    }

    /// Records and pushes notifications. Sending never blocks; with no
    /// subscriber the notification is only kept in the history.
    pub fn publish(&self, notifications: &[Notification]) {
        let mut history = self.history.lock().expect("history lock");
        for n in notifications {
            let index = history.len();
            history.push(n.clone());
            let _ = self.push.send(Pushed {
                index,
                notification: n.clone(),
            });
        }
    }

    /// Milliseconds since the session was created.
    pub fn elapsed_ms(&self) -> u64 {
        self.created.elapsed().as_millis() as u64
    }
}

pub struct Inner {
    pub config: ServiceConfig,
    pub corpus: Arc<Corpus>,
    pub provider: Arc<dyn Provider>,
    pub sessions: Mutex<BTreeMap<String, Arc<LiveSession>>>,
    pub counter: Mutex<u64>,
}

/// Shared server state.
#[derive(Clone)]
pub struct AppState(pub Arc<Inner>);

impl AppState {
    /// Loads the corpus and builds the provider (honouring `PROVIDER_MODE`).
    pub fn new(config: ServiceConfig) -> feedscout::Result<Self> {
        let corpus = Arc::new(config.corpus.load()?);
        let provider = build_provider(provider_mode(&config.engine)?, &corpus.category_ids())?;
        Ok(Self::with_provider(config, corpus, provider))
    }

    pub fn with_provider(config: ServiceConfig, corpus: Arc<Corpus>, provider: Arc<dyn Provider>) -> Self {
        Self(Arc::new(Inner {
            config,
            corpus,
            provider,
            sessions: Mutex::new(BTreeMap::new()),
            counter: Mutex::new(0),
        }))
    }

    pub fn get(&self, session_id: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.0
            .sessions
            .lock()
            .expect("sessions lock")
            .get(session_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(session_id))
    }

    pub fn next_id(&self) -> String {
        let mut n = self.0.counter.lock().expect("counter lock");
        *n += 1;
        format!("s{:04}", *n)
    }

    pub fn insert(&self, session_id: String, live: LiveSession) -> Result<Arc<LiveSession>, ApiError> {
        let mut sessions = self.0.sessions.lock().expect("sessions lock");
        if sessions.contains_key(&session_id) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "conflict",
                format!("session `{session_id}` already exists"),
            ));
        }
        if sessions.len() >= self.0.config.max_sessions {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "resource",
                format!("at most {} live sessions", self.0.config.max_sessions),
            ));
        }
        let live = Arc::new(live);
        sessions.insert(session_id, live.clone());
        Ok(live)
    }

    pub fn remove(&self, session_id: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.0
            .sessions
            .lock()
            .expect("sessions lock")
            .remove(session_id)
            .ok_or_else(|| ApiError::not_found(session_id))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.0.sessions.lock().expect("sessions lock").keys().cloned().collect()
    }
}
