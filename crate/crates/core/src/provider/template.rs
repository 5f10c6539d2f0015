use crate::analysis::InsightReport;
use crate::dialogue::{Direction, DirectionMode, ExplorationOption, OptionKind};
use crate::error::Result;
use crate::taxonomy::{self, category_info};

use super::{Provider, ProviderRequest, ProviderResponse, ProviderTag};

/// Deterministic provider: fixed phrasings filled in from the request.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateProvider;

impl Provider for TemplateProvider {
    fn generate(&self, request: &ProviderRequest) -> Result<ProviderResponse> {
        let (text, options, direction) = match request {
            ProviderRequest::InsightText { report } => (insight_text(report), None, None),
            ProviderRequest::OptionSet { report } => {
                ("Where would you like to take it?".to_string(), Some(option_set(report)), None)
            }
            ProviderRequest::NarrowingSet { option } => {
                let (text, opts) = narrowing_set(option);
                (text, Some(opts), None)
            }
            ProviderRequest::MapFreeText { text, categories } => match map_free_text(text, categories) {
                Some(d) => (reply_text(&d), None, Some(d)),
                None => (
                    "Happy to help. What would you like to see more or less of? A topic, a hobby, or \"something new\" all work."
                        .to_string(),
                    None,
                    None,
                ),
            },
            ProviderRequest::ConfirmationText { direction } => (confirmation_text(direction), None, None),
        };
        Ok(ProviderResponse {
            text,
            options,
            direction,
            provider_tag: ProviderTag::Template,
        })
    }
}

fn name(category: &str) -> String {
    taxonomy::display_name(category).to_lowercase()
}

fn join_names(categories: &[String]) -> String {
    let names: Vec<String> = categories.iter().map(|c| name(c)).collect();
    match names.as_slice() {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn insight_text(report: &InsightReport) -> String {
    let dominant: Vec<String> = report.dominant.iter().map(|(c, _)| c.clone()).collect();
    let share: f64 = report.dominant.iter().map(|(_, p)| p).sum();
    let mut text = if dominant.is_empty() {
        "Your feed is empty so far.".to_string()
    } else {
        format!(
            "Your feed is about {}% {}.",
            (share * 100.0).round() as u32,
            join_names(&dominant)
        )
    };
    match report.signals.first() {
        Some(signal) => {
            text.push_str(&format!(
                " You tend to pause on {} posts. Want to explore that direction, or something completely different?",
                name(&signal.category)
            ));
        }
        None => text.push_str(" Want to mix things up a little?"),
    }
    text
}

fn pursue(category: &str, kind: OptionKind) -> ExplorationOption {
    ExplorationOption {
        option_id: format!("pursue:{category}"),
        label: format!("Yes, show me more {} content", name(category)),
        direction: Direction::increase(category),
        kind,
    }
}

fn reduce(category: &str) -> ExplorationOption {
    ExplorationOption {
        option_id: format!("reduce:{category}"),
        label: format!("Less {}, it's getting repetitive", name(category)),
        direction: Direction::decrease(category),
        kind: OptionKind::ReduceDominant,
    }
}

fn surprise() -> ExplorationOption {
    ExplorationOption {
        option_id: "surprise".into(),
        label: "Surprise me with something completely new".into(),
        direction: Direction::surprise(),
        kind: OptionKind::Surprise,
    }
}

/// Up to two signal options, the top dominant category (both when there are
/// no signals), and one surprise option; padded to three with custom picks
/// from underrepresented categories.
fn option_set(report: &InsightReport) -> Vec<ExplorationOption> {
    let mut opts: Vec<ExplorationOption> = report
        .signals
        .iter()
        .take(2)
        .map(|s| pursue(&s.category, OptionKind::PursueSignal))
        .collect();
    let reduce_n = if opts.is_empty() { 2 } else { 1 };
    opts.extend(report.dominant.iter().take(reduce_n).map(|(c, _)| reduce(c)));
    let pads = report
        .underrepresented
        .iter()
        .filter(|c| !report.signals.iter().any(|s| &s.category == *c))
        .map(|c| ExplorationOption {
            option_id: format!("custom:{c}"),
            label: format!("Show me some {}", name(c)),
            direction: Direction::increase(c),
            kind: OptionKind::Custom,
        });
    let missing = 2usize.saturating_sub(opts.len());
    opts.extend(pads.take(missing));
    opts.push(surprise());
    opts
}

fn narrowing_set(option: &ExplorationOption) -> (String, Vec<ExplorationOption>) {
    let dir = &option.direction;
    let (Some(category), true) = (dir.target_categories.first(), dir.admits_refinement()) else {
        return ("Okay.".into(), Vec::new());
    };
    let Some(info) = category_info(category) else {
        return ("Okay.".into(), Vec::new());
    };
    let display = info.display_name.to_lowercase();
    match dir.mode {
        DirectionMode::Increase => {
            let opts = info
                .subtopics
                .iter()
                .map(|s| ExplorationOption {
                    option_id: format!("refine:{category}:{}", s.token),
                    label: s.label.to_string(),
                    direction: dir.clone().refined(s.token),
                    kind: option.kind,
                })
                .collect();
            (format!("Nice. What kind of {display} content interests you?"), opts)
        }
        DirectionMode::Decrease => {
            let mut opts = vec![ExplorationOption {
                option_id: format!("refine:{category}:overall"),
                label: format!("Less {display} overall"),
                direction: dir.clone(),
                kind: option.kind,
            }];
            opts.extend(info.subtopics.iter().map(|s| ExplorationOption {
                option_id: format!("refine:{category}:{}", s.token),
                label: format!("Fewer posts like: {}", s.label.to_lowercase()),
                direction: dir.clone().refined(s.token),
                kind: option.kind,
            }));
            (format!("Got it. What's getting repetitive about {display}?"), opts)
        }
        DirectionMode::Surprise => ("Okay.".into(), Vec::new()),
    }
}

fn reply_text(direction: &Direction) -> String {
    match direction.mode {
        DirectionMode::Increase => format!("Sounds good: more {}.", join_names(&direction.target_categories)),
        DirectionMode::Decrease => format!("Sounds good: less {}.", join_names(&direction.target_categories)),
        DirectionMode::Surprise => "Sounds good: something completely new.".into(),
    }
}

fn confirmation_text(direction: &Direction) -> String {
    const TAIL: &str = "Keep scrolling, and let me know if you want to adjust.";
    let refinement = direction
        .refinement
        .as_deref()
        .zip(direction.target_categories.first())
        .and_then(|(tok, cat)| taxonomy::subtopic(cat, tok))
        .map(|s| format!(" ({})", s.label.to_lowercase()))
        .unwrap_or_default();
    match direction.mode {
        DirectionMode::Increase => format!(
            "I've started mixing in {} content{refinement}. {TAIL}",
            join_names(&direction.target_categories)
        ),
        DirectionMode::Decrease => format!(
            "I'm easing off {} content{refinement}. {TAIL}",
            join_names(&direction.target_categories)
        ),
        DirectionMode::Surprise => format!("I've started mixing in categories you rarely see. {TAIL}"),
    }
}

const DECREASE_CUES: [&str; 9] = [
    "less", "fewer", "no more", "tired of", "bored of", "bored with", "stop", "enough", "too much",
];
const SURPRISE_CUES: [&str; 7] = [
    "surprise",
    "something new",
    "something different",
    "anything new",
    "completely new",
    "random",
    "new stuff",
];

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '-')
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Categories mentioned in `clause`, in order of first mention.
fn mentioned(clause: &str, categories: &[String]) -> Vec<String> {
    let ws = words(clause);
    let mut found: Vec<(usize, String)> = Vec::new();
    for c in categories {
        let display = taxonomy::display_name(c).to_lowercase();
        let spaced = c.replace('_', " ");
        let mut first = ws.iter().position(|w| w == c);
        if let Some(info) = category_info(c) {
            first = first.or_else(|| ws.iter().position(|w| info.synonyms.contains(&w.as_str())));
        }
        if first.is_none() && (clause.contains(&display) || clause.contains(&spaced)) {
            let at = clause.find(&display).or_else(|| clause.find(&spaced)).unwrap_or(0);
            first = Some(clause[..at].split_whitespace().count());
        }
        if let Some(pos) = first {
            found.push((pos, c.clone()));
        }
    }
    found.sort();
    found.into_iter().map(|(_, c)| c).collect()
}

/// Keyword mapping from a typed message to a direction. Categories named
/// alongside a reduction cue become a decrease; other named categories an
/// increase (which wins when both appear). With no category, a novelty cue
/// means surprise. Anything else is unparseable.
pub fn map_free_text(text: &str, categories: &[String]) -> Option<Direction> {
    let lower = text.to_lowercase();
    let mut more = Vec::new();
    let mut less = Vec::new();
    for clause in lower.split([',', '.', ';', '!', '?']).flat_map(|c| c.split(" but ")) {
        let cats = mentioned(clause, categories);
        let reducing = DECREASE_CUES.iter().any(|cue| clause.contains(cue));
        for c in cats {
            let bucket = if reducing { &mut less } else { &mut more };
            if !bucket.contains(&c) {
                bucket.push(c);
            }
        }
    }
    more.retain(|c| !less.contains(c));
    if !more.is_empty() {
        let mut d = Direction {
            mode: DirectionMode::Increase,
            target_categories: more,
            refinement: None,
        };
        if let [only] = d.target_categories.as_slice() {
            if let Some(info) = category_info(only) {
                let ws = words(&lower);
                d.refinement = info
                    .subtopics
                    .iter()
                    .find(|s| s.keywords.iter().any(|k| ws.iter().any(|w| w == k)))
                    .map(|s| s.token.to_string());
            }
        }
        return Some(d);
    }
    if !less.is_empty() {
        return Some(Direction {
            mode: DirectionMode::Decrease,
            target_categories: less,
            refinement: None,
        });
    }
    if SURPRISE_CUES.iter().any(|cue| lower.contains(cue)) {
        return Some(Direction::surprise());
    }
    None
}
