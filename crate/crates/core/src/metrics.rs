//! Log-derived exploration and efficiency measures.
//!
//! Every function here is a pure function of the event slice plus the
//! initial feed composition and thresholds. Windows are delimited by phase
//! marks: "exploration" means the events strictly between the exploration
//! start and end marks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analysis::{compute_viewed_distribution, shannon_entropy, CategoryDistribution, TimeWindow};
use crate::condition::Condition;
use crate::dialogue::TurnKind;
use crate::error::{Error, Result};
use crate::event_log::{phase_start_t, phase_window, BehaviorEvent, EventData, LogHeader, Phase};
use crate::feed::{ChangeCause, Origin};

/// The events of the exploration phase, or the whole stream when the log has
/// no phase marks at all.
fn exploration_or_all(events: &[BehaviorEvent]) -> &[BehaviorEvent] {
    phase_window(events, Phase::Exploration).unwrap_or(events)
}

/// Categories with at least one impression in `window`. With a positive
/// `min_dwell_ms`, only impressions that lasted that long count.
fn browsed_categories(window: &[BehaviorEvent], min_dwell_ms: u64) -> BTreeSet<String> {
    window
        .iter()
        .filter_map(|e| match &e.data {
            EventData::ImpressionEnter { category, .. } if min_dwell_ms == 0 => Some(category.clone()),
            EventData::ImpressionExit { category, dwell_ms, .. } if min_dwell_ms > 0 && *dwell_ms >= min_dwell_ms => {
                Some(category.clone())
            }
            _ => None,
        })
        .collect()
}

/// Number of distinct categories browsed during exploration.
pub fn exploration_breadth(events: &[BehaviorEvent], min_dwell_ms: u64) -> Result<usize> {
    Ok(browsed_categories(phase_window(events, Phase::Exploration)?, min_dwell_ms).len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityGain {
    pub h_pre: f64,
    pub h_post: f64,
    pub delta: f64,
}

/// Entropy of the exploration-phase viewed distribution minus that of the
/// warm-up phase.
pub fn diversity_gain(events: &[BehaviorEvent]) -> Result<DiversityGain> {
    let pre = compute_viewed_distribution(phase_window(events, Phase::Warmup)?, TimeWindow::ALL)?;
    let post = compute_viewed_distribution(phase_window(events, Phase::Exploration)?, TimeWindow::ALL)?;
    let (h_pre, h_post) = (shannon_entropy(&pre), shannon_entropy(&post));
    Ok(DiversityGain {
        h_pre,
        h_post,
        delta: h_post - h_pre,
    })
}

/// Categories of `categories` whose share of the initial feed is below
/// `threshold`.
pub fn underrepresented_initially(initial: &CategoryDistribution, categories: &[String], threshold: f64) -> Vec<String> {
    categories
        .iter()
        .filter(|c| initial.share(c) < threshold)
        .cloned()
        .collect()
}

/// Fraction of initially underrepresented categories browsed during
/// exploration; 0 when there are none.
pub fn bubble_breaking_rate(
    events: &[BehaviorEvent],
    initial: &CategoryDistribution,
    categories: &[String],
    threshold: f64,
    min_dwell_ms: u64,
) -> Result<f64> {
    let under = underrepresented_initially(initial, categories, threshold);
    if under.is_empty() {
        return Ok(0.0);
    }
    let browsed = browsed_categories(phase_window(events, Phase::Exploration)?, min_dwell_ms);
    let hit = under.iter().filter(|c| browsed.contains(*c)).count();
    Ok(hit as f64 / under.len() as f64)
}

/// Characters typed during exploration (chat messages and search queries).
/// Option clicks cost nothing.
pub fn expression_cost(events: &[BehaviorEvent]) -> usize {
    exploration_or_all(events)
        .iter()
        .map(|e| match &e.data {
            EventData::FreeText { chars, .. } | EventData::SearchQuery { chars, .. } => *chars,
            _ => 0,
        })
        .sum()
}

/// Time from exploration start to the end of the first view of an initially
/// underrepresented category lasting at least `min_dwell_ms`.
pub fn time_to_first_discovery(
    events: &[BehaviorEvent],
    initial: &CategoryDistribution,
    categories: &[String],
    threshold: f64,
    min_dwell_ms: u64,
) -> Result<Option<u64>> {
    let start = phase_start_t(events, Phase::Exploration)?;
    let under = underrepresented_initially(initial, categories, threshold);
    Ok(phase_window(events, Phase::Exploration)?
        .iter()
        .find(|e| {
            matches!(&e.data, EventData::ImpressionExit { category, dwell_ms, .. }
                if *dwell_ms >= min_dwell_ms && under.contains(category))
        })
        .map(|e| e.t_ms - start))
}

fn is_tool_action(data: &EventData) -> bool {
    matches!(
        data,
        EventData::SearchQuery { .. } | EventData::OptionSelect { .. } | EventData::FreeText { .. }
    )
}

/// Whether the participant used the condition's tool within `window_ms` of
/// exploration start. `None` for FEED, which has no tool. Assistant-initiated
/// events do not count; the participant's response does.
pub fn tool_engagement(events: &[BehaviorEvent], condition: Condition, window_ms: u64) -> Result<Option<bool>> {
    if !condition.has_tool() {
        return Ok(None);
    }
    let start = phase_start_t(events, Phase::Exploration)?;
    Ok(Some(
        phase_window(events, Phase::Exploration)?
            .iter()
            .any(|e| is_tool_action(&e.data) && e.t_ms - start < window_ms),
    ))
}

/// Insight turns plus user actions (option picks and typed messages).
pub fn conversation_depth(events: &[BehaviorEvent]) -> usize {
    exploration_or_all(events)
        .iter()
        .filter(|e| {
            matches!(
                e.data,
                EventData::DialogueTurn {
                    turn: TurnKind::Insight,
                    ..
                } | EventData::OptionSelect { .. }
                    | EventData::FreeText { .. }
            )
        })
        .count()
}

/// Scrolled distance over scrolling time within `[from_ms, to_ms)`, in px/s.
/// A refresh starts a new page, so distance is not measured across it.
pub fn scroll_velocity(events: &[BehaviorEvent], from_ms: u64, to_ms: u64) -> Option<f64> {
    let mut distance = 0u64;
    let mut elapsed = 0u64;
    let mut last: Option<(u64, i64)> = None;
    for e in events.iter().filter(|e| e.t_ms >= from_ms && e.t_ms < to_ms) {
        match &e.data {
            EventData::Scroll { position_px } => {
                if let Some((t0, p0)) = last {
                    distance += p0.abs_diff(*position_px);
                    elapsed += e.t_ms - t0;
                }
                last = Some((e.t_ms, *position_px));
            }
            EventData::Refresh { .. } => last = None,
            _ => {}
        }
    }
    (elapsed > 0).then(|| distance as f64 * 1000.0 / elapsed as f64)
}

/// Time of the first exploration-phase composition change caused by a newly
/// applied direction.
pub fn first_adjustment_t(events: &[BehaviorEvent]) -> Option<u64> {
    exploration_or_all(events)
        .iter()
        .find(|e| {
            matches!(
                e.data,
                EventData::CompositionChange {
                    cause: ChangeCause::Direction,
                    ..
                }
            )
        })
        .map(|e| e.t_ms)
}

/// Scroll velocity in the `window_ms` before and after the first feed
/// adjustment.
pub fn scroll_velocity_around_adjustment(events: &[BehaviorEvent], window_ms: u64) -> (Option<f64>, Option<f64>) {
    match first_adjustment_t(events) {
        Some(a) => (
            scroll_velocity(events, a.saturating_sub(window_ms), a),
            scroll_velocity(events, a, a.saturating_add(window_ms)),
        ),
        None => (None, None),
    }
}

/// Mean dwell on initial and on blended items during exploration.
pub fn dwell_by_origin(events: &[BehaviorEvent]) -> (Option<f64>, Option<f64>) {
    let mut sums: BTreeMap<Origin, (u64, u64)> = BTreeMap::new();
    for e in exploration_or_all(events) {
        if let EventData::ImpressionExit { origin, dwell_ms, .. } = &e.data {
            let entry = sums.entry(*origin).or_default();
            entry.0 += dwell_ms;
            entry.1 += 1;
        }
    }
    let mean = |o: Origin| sums.get(&o).map(|(s, n)| *s as f64 / *n as f64);
    (mean(Origin::Initial), mean(Origin::Blended))
}

/// Thresholds and context for computing a session's metrics.
#[derive(Debug, Clone)]
pub struct MetricsContext {
    pub condition: Condition,
    pub categories: Vec<String>,
    pub initial: CategoryDistribution,
    pub underrep_threshold: f64,
    pub browse_min_dwell_ms: u64,
    pub discovery_min_dwell_ms: u64,
    pub engagement_window_ms: u64,
    pub velocity_window_ms: u64,
}

impl MetricsContext {
    pub fn from_header(header: &LogHeader) -> Result<Self> {
        let cfg = &header.config;
        Ok(Self {
            condition: header.condition,
            categories: header.categories.clone(),
            initial: CategoryDistribution::from_counts(&header.initial_counts)
                .map_err(|_| Error::Validation("header has no initial composition".into()))?,
            underrep_threshold: cfg.underrep_threshold,
            browse_min_dwell_ms: cfg.browse_min_dwell_ms,
            discovery_min_dwell_ms: cfg.discovery_min_dwell_ms,
            engagement_window_ms: cfg.engagement_window_ms,
            velocity_window_ms: cfg.velocity_window_ms,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub condition: Condition,
    pub breadth: usize,
    /// Absent when either phase has no impressions.
    pub h_pre_bits: Option<f64>,
    pub h_post_bits: Option<f64>,
    pub diversity_gain_bits: Option<f64>,
    pub bubble_breaking_rate: f64,
    pub expression_cost_chars: usize,
    pub time_to_first_discovery_ms: Option<u64>,
    /// Absent for FEED, which has no tool.
    pub tool_engaged_first_5min: Option<bool>,
    pub conversation_turns: usize,
    pub scroll_velocity_pre: Option<f64>,
    pub scroll_velocity_post: Option<f64>,
    pub mean_dwell_initial_ms: Option<f64>,
    pub mean_dwell_blended_ms: Option<f64>,
}

impl SessionMetrics {
    pub fn compute(header: &LogHeader, events: &[BehaviorEvent]) -> Result<Self> {
        Self::compute_with(&header.session_id, &MetricsContext::from_header(header)?, events)
    }

    pub fn compute_with(session_id: &str, ctx: &MetricsContext, events: &[BehaviorEvent]) -> Result<Self> {
        let gain = match diversity_gain(events) {
            Ok(g) => Some(g),
            Err(Error::EmptyWindow) => None,
            Err(e) => return Err(e),
        };
        let (v_pre, v_post) = scroll_velocity_around_adjustment(events, ctx.velocity_window_ms);
        let (d_init, d_blend) = dwell_by_origin(events);
        Ok(Self {
            session_id: session_id.to_string(),
            condition: ctx.condition,
            breadth: exploration_breadth(events, ctx.browse_min_dwell_ms)?,
            h_pre_bits: gain.map(|g| g.h_pre),
            h_post_bits: gain.map(|g| g.h_post),
            diversity_gain_bits: gain.map(|g| g.delta),
            bubble_breaking_rate: bubble_breaking_rate(
                events,
                &ctx.initial,
                &ctx.categories,
                ctx.underrep_threshold,
                ctx.browse_min_dwell_ms,
            )?,
            expression_cost_chars: expression_cost(events),
            time_to_first_discovery_ms: time_to_first_discovery(
                events,
                &ctx.initial,
                &ctx.categories,
                ctx.underrep_threshold,
                ctx.discovery_min_dwell_ms,
            )?,
            tool_engaged_first_5min: tool_engagement(events, ctx.condition, ctx.engagement_window_ms)?,
            conversation_turns: conversation_depth(events),
            scroll_velocity_pre: v_pre,
            scroll_velocity_post: v_post,
            mean_dwell_initial_ms: d_init,
            mean_dwell_blended_ms: d_blend,
        })
    }

    /// Two-column human-readable rendering.
    pub fn to_table(&self) -> String {
        let opt_f = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
        let rows: Vec<(&str, String)> = vec![
            ("session", self.session_id.clone()),
            ("condition", self.condition.to_string()),
            ("breadth", self.breadth.to_string()),
            ("h_pre_bits", opt_f(self.h_pre_bits, 4)),
            ("h_post_bits", opt_f(self.h_post_bits, 4)),
            ("diversity_gain_bits", opt_f(self.diversity_gain_bits, 4)),
            ("bubble_breaking_rate", format!("{:.3}", self.bubble_breaking_rate)),
            ("expression_cost_chars", self.expression_cost_chars.to_string()),
            (
                "time_to_first_discovery_s",
                opt_f(self.time_to_first_discovery_ms.map(|v| v as f64 / 1000.0), 1),
            ),
            (
                "tool_engaged_first_5min",
                self.tool_engaged_first_5min.map_or("n/a".into(), |b| b.to_string()),
            ),
            ("conversation_turns", self.conversation_turns.to_string()),
            ("scroll_velocity_pre_px_s", opt_f(self.scroll_velocity_pre, 1)),
            ("scroll_velocity_post_px_s", opt_f(self.scroll_velocity_post, 1)),
            ("mean_dwell_initial_ms", opt_f(self.mean_dwell_initial_ms, 0)),
            ("mean_dwell_blended_ms", opt_f(self.mean_dwell_blended_ms, 0)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}
