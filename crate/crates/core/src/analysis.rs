//! Pure analysis over feed state and the event stream.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{BehaviorEvent, ClickTarget, EventData};
use crate::feed::{FeedState, Origin};

/// Category proportions; always sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDistribution {
    proportions: BTreeMap<String, f64>,
}

impl CategoryDistribution {
    pub fn new(proportions: BTreeMap<String, f64>) -> Result<Self> {
        if proportions.is_empty() {
            return Err(Error::Validation("empty distribution".into()));
        }
        if let Some((c, p)) = proportions.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Validation(format!("share of `{c}` is {p}")));
        }
        let total: f64 = proportions.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("shares sum to {total}")));
        }
        Ok(Self { proportions })
    }

    pub fn from_counts(counts: &BTreeMap<String, usize>) -> Result<Self> {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(Error::EmptyWindow);
        }
        Ok(Self {
            proportions: counts
                .iter()
                .filter(|(_, n)| **n > 0)
                .map(|(c, n)| (c.clone(), *n as f64 / total as f64))
                .collect(),
        })
    }

    pub fn proportions(&self) -> &BTreeMap<String, f64> {
        &self.proportions
    }

    /// Share of `category`, 0 when absent.
    pub fn share(&self, category: &str) -> f64 {
        self.proportions.get(category).copied().unwrap_or(0.0)
    }
}

/// Shannon entropy in bits. Zero shares contribute nothing.
pub fn shannon_entropy(d: &CategoryDistribution) -> f64 {
    let h: f64 = d
        .proportions
        .values()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Inclusive range of session-relative milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start_ms: u64,
    pub end_ms: u64,
}

impl TimeWindow {
    pub const ALL: TimeWindow = TimeWindow {
        start_ms: 0,
        end_ms: u64::MAX,
    };

    pub fn contains(&self, t: u64) -> bool {
        (self.start_ms..=self.end_ms).contains(&t)
    }
}

/// Distribution of viewed content by impression: an item that scrolls into
/// view counts once for as long as it stays there, and again if it comes
/// back later.
pub fn compute_viewed_distribution(events: &[BehaviorEvent], window: TimeWindow) -> Result<CategoryDistribution> {
    let mut counts = BTreeMap::new();
    for e in events.iter().filter(|e| window.contains(e.t_ms)) {
        if let EventData::ImpressionEnter { category, .. } = &e.data {
            *counts.entry(category.clone()).or_insert(0usize) += 1;
        }
    }
    CategoryDistribution::from_counts(&counts)
}

/// The `top_n` largest shares, ties broken by category id.
pub fn detect_dominant(d: &CategoryDistribution, top_n: usize) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = d
        .proportions
        .iter()
        .filter(|(_, p)| **p > 0.0)
        .map(|(c, p)| (c.clone(), *p))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    ranked
}

/// Categories of `all_categories` (absent ones included) whose share is
/// below `threshold`, in the given order.
pub fn detect_underrepresented(
    d: &CategoryDistribution,
    all_categories: &[String],
    threshold: f64,
) -> Result<Vec<String>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Validation(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(all_categories
        .iter()
        .filter(|c| d.share(c) < threshold)
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProactivityLevel {
    /// Insights only on an explicit request.
    Reactive,
    /// One automatic insight per phase after enough browsing.
    #[default]
    Moderate,
    /// An insight after every refresh or long scroll.
    Eager,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerOrigin {
    Auto,
    UserRequest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerConfig {
    pub top_n: usize,
    pub underrep_threshold: f64,
    pub signal_multiplier: f64,
    pub min_evidence: usize,
    pub min_impressions: usize,
    pub trigger_items: usize,
    pub trigger_min_elapsed_ms: u64,
    pub eager_scroll_px: u64,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        crate::config::EngineConfig::default().analyzer()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSignal {
    pub category: String,
    pub evidence_count: usize,
    pub mean_dwell_ms: f64,
    pub baseline_dwell_ms: f64,
}

fn median(values: &mut [u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) as f64 / 2.0
    } else {
        values[mid] as f64
    })
}

/// Non-dominant categories whose mean dwell clearly exceeds the median dwell
/// on dominant content.
pub fn detect_latent_signals(
    events: &[BehaviorEvent],
    feed_composition: &CategoryDistribution,
    config: &AnalyzerConfig,
) -> Vec<LatentSignal> {
    let mut dwells: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for e in events {
        if let EventData::ImpressionExit { category, dwell_ms, .. } = &e.data {
            dwells.entry(category).or_default().push(*dwell_ms);
        }
    }
    let total: usize = dwells.values().map(Vec::len).sum();
    if total < config.min_impressions {
        return Vec::new();
    }
    let dominant: Vec<String> = detect_dominant(feed_composition, config.top_n)
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    let mut baseline: Vec<u64> = dominant
        .iter()
        .flat_map(|c| dwells.get(c.as_str()).cloned().unwrap_or_default())
        .collect();
    let Some(baseline) = median(&mut baseline).filter(|b| *b > 0.0) else {
        return Vec::new();
    };
    let mut signals: Vec<LatentSignal> = dwells
        .iter()
        .filter(|(c, v)| !dominant.iter().any(|d| d == *c) && v.len() >= config.min_evidence)
        .filter_map(|(c, v)| {
            let mean = v.iter().sum::<u64>() as f64 / v.len() as f64;
            (mean > config.signal_multiplier * baseline).then(|| LatentSignal {
                category: c.to_string(),
                evidence_count: v.len(),
                mean_dwell_ms: mean,
                baseline_dwell_ms: baseline,
            })
        })
        .collect();
    signals.sort_by(|a, b| {
        b.mean_dwell_ms
            .total_cmp(&a.mean_dwell_ms)
            .then_with(|| a.category.cmp(&b.category))
    });
    signals
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerDecision {
    pub fire: bool,
    pub origin: Option<TriggerOrigin>,
    pub reason: String,
}

impl TriggerDecision {
    fn no(reason: impl Into<String>) -> Self {
        Self {
            fire: false,
            origin: None,
            reason: reason.into(),
        }
    }

    fn yes(origin: TriggerOrigin, reason: impl Into<String>) -> Self {
        Self {
            fire: true,
            origin: Some(origin),
            reason: reason.into(),
        }
    }
}

/// Decides whether the assistant should open with an insight now.
///
/// Only events since the most recent phase mark are considered. An explicit
/// request (a click on the assistant button after the last trigger) fires at
/// every level; automatic triggers stop for the phase once the user
/// dismisses the assistant.
pub fn should_trigger(events: &[BehaviorEvent], policy: ProactivityLevel, config: &AnalyzerConfig) -> TriggerDecision {
    let phase_start = events
        .iter()
        .rposition(|e| matches!(e.data, EventData::PhaseMark { .. }))
        .map_or(0, |i| i + 1);
    let phase = &events[phase_start..];
    let last_trigger = phase
        .iter()
        .rposition(|e| matches!(e.data, EventData::Trigger { .. }));
    let since_trigger = &phase[last_trigger.map_or(0, |i| i + 1)..];

    if since_trigger.iter().any(|e| {
        matches!(
            e.data,
            EventData::Click {
                target: ClickTarget::AssistantButton,
                ..
            }
        )
    }) {
        return TriggerDecision::yes(TriggerOrigin::UserRequest, "explicit request");
    }
    if phase.iter().any(|e| matches!(e.data, EventData::Dismiss { .. })) {
        return TriggerDecision::no("dismissed this phase");
    }
    match policy {
        ProactivityLevel::Reactive => TriggerDecision::no("reactive: waiting for a request"),
        ProactivityLevel::Moderate => {
            let auto_fired = phase.iter().any(|e| {
                matches!(
                    e.data,
                    EventData::Trigger {
                        origin: TriggerOrigin::Auto,
                        ..
                    }
                )
            });
            if auto_fired {
                return TriggerDecision::no("already fired this phase");
            }
            let surfaced = distinct_surfaced(phase);
            if surfaced < config.trigger_items {
                return TriggerDecision::no(format!("{surfaced} of {} items surfaced", config.trigger_items));
            }
            let start_t = events
                .get(phase_start.wrapping_sub(1))
                .map_or(0, |e| e.t_ms);
            let elapsed = phase.last().map_or(0, |e| e.t_ms).saturating_sub(start_t);
            if elapsed < config.trigger_min_elapsed_ms {
                return TriggerDecision::no("minimum browsing time not reached");
            }
            TriggerDecision::yes(TriggerOrigin::Auto, format!("{surfaced} distinct items surfaced"))
        }
        ProactivityLevel::Eager => {
            if since_trigger
                .iter()
                .any(|e| matches!(e.data, EventData::Refresh { .. }))
            {
                return TriggerDecision::yes(TriggerOrigin::Auto, "feed refreshed");
            }
            let mut travelled = 0u64;
            let mut last: Option<i64> = None;
            for e in since_trigger {
                match &e.data {
                    EventData::Scroll { position_px } => {
                        if let Some(prev) = last {
                            travelled += prev.abs_diff(*position_px);
                        }
                        last = Some(*position_px);
                    }
                    EventData::Refresh { .. } => last = None,
                    _ => {}
                }
            }
            if travelled >= config.eager_scroll_px {
                TriggerDecision::yes(TriggerOrigin::Auto, format!("scrolled {travelled} px"))
            } else {
                TriggerDecision::no("not enough activity since the last insight")
            }
        }
    }
}

/// Distinct feed items (search results excluded) entered in `events`.
pub fn distinct_surfaced(events: &[BehaviorEvent]) -> usize {
    events
        .iter()
        .filter_map(|e| match &e.data {
            EventData::ImpressionEnter { item_id, origin, .. } if *origin != Origin::Search => Some(item_id),
            _ => None,
        })
        .collect::<BTreeSet<_>>()
        .len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightReport {
    pub distribution: CategoryDistribution,
    pub entropy_bits: f64,
    pub dominant: Vec<(String, f64)>,
    pub underrepresented: Vec<String>,
    pub signals: Vec<LatentSignal>,
    pub browsed_item_count: usize,
}

/// Summarizes the current feed and browsing behavior.
pub fn build_insight(
    state: &FeedState,
    events: &[BehaviorEvent],
    categories: &[String],
    config: &AnalyzerConfig,
) -> InsightReport {
    let distribution = state.current_composition();
    InsightReport {
        entropy_bits: shannon_entropy(&distribution),
        dominant: detect_dominant(&distribution, config.top_n),
        underrepresented: detect_underrepresented(&distribution, categories, config.underrep_threshold)
            .unwrap_or_default(),
        signals: detect_latent_signals(events, &distribution, config),
        browsed_item_count: distinct_surfaced(events),
        distribution,
    }
}
