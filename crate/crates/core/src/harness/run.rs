use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::detect_dominant;
use crate::analysis::CategoryDistribution;
use crate::condition::Condition;
use crate::config::EngineConfig;
use crate::corpus::{Corpus, StandardFeed};
use crate::error::{Error, Result};
use crate::event_log::CorpusSource;
use crate::metrics::SessionMetrics;
use crate::provider::Provider;
use crate::session::{Session, SessionSetup};

use super::agent::{Agent, AgentKind, AgentPolicy, Schedule};
use super::plan::SessionPlan;

/// Warm-up and exploration lengths in simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Durations {
    pub warmup_ms: u64,
    pub explore_ms: u64,
}

impl Default for Durations {
    fn default() -> Self {
        Self {
            warmup_ms: 5 * 60_000,
            explore_ms: 15 * 60_000,
        }
    }
}

fn parse_duration(text: &str) -> Result<u64> {
    let text = text.trim();
    let split = text.find(|c: char| !c.is_ascii_digit()).unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let n: u64 = num
        .parse()
        .map_err(|_| Error::Validation(format!("bad duration `{text}`")))?;
    let scale = match unit {
        "ms" => 1,
        "s" => 1000,
        "m" | "min" => 60_000,
        "h" => 3_600_000,
        _ => return Err(Error::Validation(format!("bad duration unit in `{text}` (use ms, s, m or h)"))),
    };
    Ok(n * scale)
}

impl FromStr for Durations {
    type Err = Error;

    /// Parses `warmup=5m,explore=15m`; either key may be omitted.
    fn from_str(s: &str) -> Result<Self> {
        let mut d = Durations::default();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("expected key=value, got `{part}`")))?;
            match key.trim() {
                "warmup" => d.warmup_ms = parse_duration(value)?,
                "explore" | "exploration" => d.explore_ms = parse_duration(value)?,
                other => return Err(Error::Validation(format!("unknown duration key `{other}`"))),
            }
        }
        if d.explore_ms == 0 {
            return Err(Error::Validation("exploration must last longer than 0".into()));
        }
        Ok(d)
    }
}

impl From<Durations> for Schedule {
    fn from(d: Durations) -> Self {
        Schedule {
            warmup_ms: d.warmup_ms,
            explore_ms: d.explore_ms,
        }
    }
}

/// Shared settings for simulated sessions.
#[derive(Clone)]
pub struct SimOptions {
    pub durations: Durations,
    pub config: EngineConfig,
    pub corpus_source: CorpusSource,
    pub corpus: Arc<Corpus>,
    pub provider: Arc<dyn Provider>,
    /// Where to write one log per session; logs are kept in memory only
    /// when absent.
    pub out_dir: Option<PathBuf>,
}

impl SimOptions {
    /// Default configuration on the built-in synthetic corpus.
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        let corpus_source = CorpusSource::Synthetic { size: 320, seed: 7 };
        let corpus = Arc::new(corpus_source.load().expect("built-in corpus loads"));
        Self {
            durations: Durations::default(),
            config: EngineConfig::default(),
            corpus_source,
            corpus,
            provider,
            out_dir: None,
        }
    }
}

/// A finished simulated session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub session_id: String,
    pub participant_id: Option<String>,
    pub condition: Condition,
    pub feed: StandardFeed,
    pub agent: AgentKind,
    pub latent_interest: String,
    pub engaged: bool,
    pub log_path: Option<PathBuf>,
    pub metrics: SessionMetrics,
}

/// Runs one condition's session with its default agent.
pub fn simulate_session(
    session_id: &str,
    participant_id: Option<&str>,
    condition: Condition,
    feed: StandardFeed,
    seed: u64,
    opts: &SimOptions,
) -> Result<(Session, SessionOutcome)> {
    let mut setup = SessionSetup::standard(session_id, condition, feed, seed);
    setup.participant_id = participant_id.map(str::to_string);
    setup.config = opts.config.clone();
    setup.corpus = opts.corpus_source.clone();
    let mut session = Session::new(setup, opts.corpus.clone(), opts.provider.clone())?;
    let log_path = match &opts.out_dir {
        Some(dir) => {
            let path = dir.join(format!("{session_id}.jsonl"));
            session.log_to(&path)?;
            Some(path)
        }
        None => None,
    };
    let header = session.header();
    let initial = CategoryDistribution::from_counts(&header.initial_counts)?;
    let dominant: Vec<String> = detect_dominant(&initial, header.feed_spec.dominant_categories.len())
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    let kind = AgentKind::for_condition(condition);
    let policy = AgentPolicy::for_feed(
        kind,
        &header.initial_counts,
        &dominant,
        header.config.underrep_threshold,
        header.seeds.session,
    )?;
    let mut agent = Agent::new(policy, header.categories.clone(), header.seeds.session.rotate_left(17));
    let result = agent.run(&mut session, opts.durations.into());
    session.close()?;
    result?;
    let metrics = session.metrics()?;
    let outcome = SessionOutcome {
        session_id: session_id.to_string(),
        participant_id: participant_id.map(str::to_string),
        condition,
        feed,
        agent: kind,
        latent_interest: agent.policy().latent.clone(),
        engaged: agent.engaged(),
        log_path,
        metrics,
    };
    Ok((session, outcome))
}

/// Runs a participant's three sessions in order.
pub fn run_session(plan: &SessionPlan, opts: &SimOptions) -> Result<Vec<SessionOutcome>> {
    plan.validate()?;
    plan.sessions()
        .map(|(condition, feed, seed)| {
            simulate_session(
                &plan.session_id(condition),
                Some(&plan.participant_id),
                condition,
                feed,
                seed,
                opts,
            )
            .map(|(_, o)| o)
        })
        .collect()
}

/// Runs every plan, one thread per participant. Results come back in plan
/// order regardless of scheduling.
pub fn run_study(plans: &[SessionPlan], opts: &SimOptions) -> Result<Vec<SessionOutcome>> {
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let results: Vec<Result<Vec<SessionOutcome>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = plans
            .iter()
            .map(|plan| scope.spawn(move || run_session(plan, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::State("session thread panicked".into()))))
            .collect()
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}

/// Writes `plan.json` describing the study into `dir`.
pub fn write_plan(dir: &Path, plans: &[SessionPlan]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("plan.json");
    let text = serde_json::to_string_pretty(plans).map_err(|e| Error::Validation(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}
