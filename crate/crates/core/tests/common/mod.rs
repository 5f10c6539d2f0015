//! Random event streams and a from-scratch recomputation of the session
//! measures, shared by the acceptance target and the property tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use feedscout::analysis::{CategoryDistribution, TriggerOrigin, ProactivityLevel};
use feedscout::dialogue::{Direction, TurnKind};
use feedscout::event_log::{BehaviorEvent, Boundary, EventData, EventStream, Phase};
use feedscout::feed::{ChangeCause, Origin};
use feedscout::metrics::MetricsContext;
use feedscout::provider::ProviderTag;
use feedscout::Condition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATS: [&str; 6] = ["c0", "c1", "c2", "c3", "c4", "c5"];

/// The plain model a stream is generated from; the oracle reads only this.
#[derive(Debug, Clone)]
pub enum Ev {
    Mark(Phase, Boundary),
    Enter { id: String, cat: String, origin: Origin },
    Exit { id: String, cat: String, origin: Origin, dwell: u64 },
    Scroll(i64),
    Refresh,
    Search(usize),
    Text(usize),
    Pick,
    Insight,
    OtherTurn,
    Adjust,
    Trigger,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub condition: Condition,
    pub initial_counts: BTreeMap<String, usize>,
    pub threshold: f64,
    pub browse_min: u64,
    pub discovery_min: u64,
    pub engagement_window: u64,
    pub velocity_window: u64,
    pub model: Vec<(u64, Ev)>,
}

impl Scenario {
    pub fn context(&self) -> MetricsContext {
        MetricsContext {
            condition: self.condition,
            categories: CATS.iter().map(|c| c.to_string()).collect(),
            initial: CategoryDistribution::from_counts(&self.initial_counts).unwrap(),
            underrep_threshold: self.threshold,
            browse_min_dwell_ms: self.browse_min,
            discovery_min_dwell_ms: self.discovery_min,
            engagement_window_ms: self.engagement_window,
            velocity_window_ms: self.velocity_window,
        }
    }

    /// The model as library events.
    pub fn events(&self) -> Vec<BehaviorEvent> {
        let mut stream = EventStream::new("oracle");
        for (t, ev) in &self.model {
            let data = match ev.clone() {
                Ev::Mark(phase, boundary) => EventData::PhaseMark { phase, boundary },
                Ev::Enter { id, cat, origin } => EventData::ImpressionEnter {
                    item_id: id,
                    category: cat,
                    origin,
                    position: 0,
                },
                Ev::Exit { id, cat, origin, dwell } => EventData::ImpressionExit {
                    item_id: id,
                    category: cat,
                    origin,
                    dwell_ms: dwell,
                },
                Ev::Scroll(px) => EventData::Scroll { position_px: px },
                Ev::Refresh => EventData::Refresh {
                    seed: 0,
                    new_pass: false,
                    auto: false,
                },
                Ev::Search(n) => EventData::SearchQuery {
                    query: "q".repeat(n),
                    chars: n,
                    result_count: 0,
                },
                Ev::Text(n) => EventData::FreeText {
                    text: "x".repeat(n),
                    chars: n,
                },
                Ev::Pick => EventData::OptionSelect {
                    option_id: "o1".into(),
                    label: "pick".into(),
                    chars: 0,
                },
                Ev::Insight => turn(TurnKind::Insight),
                Ev::OtherTurn => turn(TurnKind::Options),
                Ev::Adjust => EventData::CompositionChange {
                    cause: ChangeCause::Direction,
                    counts: BTreeMap::new(),
                    replaced: 0,
                    direction: Some(Direction::surprise()),
                    fallback: Vec::new(),
                },
                Ev::Trigger => EventData::Trigger {
                    origin: TriggerOrigin::Auto,
                    policy: ProactivityLevel::Moderate,
                    reason: "test".into(),
                },
            };
            stream.append(*t, data).expect("generated streams are valid");
        }
        stream.events().to_vec()
    }
}

fn turn(kind: TurnKind) -> EventData {
    EventData::DialogueTurn {
        turn: kind,
        text: "t".into(),
        options: Vec::new(),
        direction: None,
        provider: ProviderTag::Template,
    }
}

fn random_events(rng: &mut ChaCha8Rng, t: &mut u64, n: usize, open: &mut BTreeMap<String, (u64, String, Origin)>, next_id: &mut usize, model: &mut Vec<(u64, Ev)>) {
    for _ in 0..n {
        *t += [0, 0, 50, 400, 1500, 2500, 6000][rng.gen_range(0..7)];
        let roll = rng.gen_range(0..100);
        let ev = if roll < 35 {
            *next_id += 1;
            let id = format!("i{next_id}");
            let cat = CATS[rng.gen_range(0..CATS.len())].to_string();
            let origin = [Origin::Initial, Origin::Initial, Origin::Blended, Origin::Search][rng.gen_range(0..4)];
            open.insert(id.clone(), (*t, cat.clone(), origin));
            Ev::Enter { id, cat, origin }
        } else if roll < 60 && !open.is_empty() {
            let key = open.keys().nth(rng.gen_range(0..open.len())).unwrap().clone();
            let (t0, cat, origin) = open.remove(&key).unwrap();
            Ev::Exit {
                id: key,
                cat,
                origin,
                dwell: *t - t0,
            }
        } else if roll < 75 {
            Ev::Scroll(rng.gen_range(-500..5000))
        } else if roll < 79 {
            Ev::Refresh
        } else if roll < 83 {
            Ev::Search(rng.gen_range(1..30))
        } else if roll < 87 {
            Ev::Text(rng.gen_range(1..90))
        } else if roll < 90 {
            Ev::Pick
        } else if roll < 93 {
            Ev::Insight
        } else if roll < 95 {
            Ev::OtherTurn
        } else if roll < 98 {
            Ev::Adjust
        } else {
            Ev::Trigger
        };
        model.push((*t, ev));
    }
}

/// A small random session: a warm-up, an exploration phase, and sometimes
/// trailing events after it.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let condition = Condition::ALL[rng.gen_range(0..4)];
    let mut initial_counts = BTreeMap::new();
    for (i, c) in CATS.iter().enumerate() {
        let n = if i < 2 { rng.gen_range(5..20) } else { rng.gen_range(0..3) };
        initial_counts.insert(c.to_string(), n);
    }
    let mut model = Vec::new();
    let mut open = BTreeMap::new();
    let mut next_id = 0;
    let mut t = rng.gen_range(0..1000);
    model.push((t, Ev::Mark(Phase::Warmup, Boundary::Start)));
    let n = rng.gen_range(0..12);
    random_events(&mut rng, &mut t, n, &mut open, &mut next_id, &mut model);
    t += rng.gen_range(0..500);
    model.push((t, Ev::Mark(Phase::Warmup, Boundary::End)));
    t += rng.gen_range(0..500);
    model.push((t, Ev::Mark(Phase::Exploration, Boundary::Start)));
    let n = rng.gen_range(0..40);
    random_events(&mut rng, &mut t, n, &mut open, &mut next_id, &mut model);
    if rng.gen_bool(0.8) {
        t += rng.gen_range(0..500);
        model.push((t, Ev::Mark(Phase::Exploration, Boundary::End)));
        let n = rng.gen_range(0..5);
    random_events(&mut rng, &mut t, n, &mut open, &mut next_id, &mut model);
    }
    Scenario {
        condition,
        initial_counts,
        threshold: [0.05, 0.1, 0.2][rng.gen_range(0..3)],
        browse_min: [0, 0, 1000][rng.gen_range(0..3)],
        discovery_min: [0, 1500, 2000][rng.gen_range(0..3)],
        engagement_window: [5_000, 20_000, 300_000][rng.gen_range(0..3)],
        velocity_window: [3_000, 10_000, 120_000][rng.gen_range(0..3)],
        model,
    }
}

/// Expected measures, computed straight from the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub breadth: usize,
    pub h_pre: Option<f64>,
    pub h_post: Option<f64>,
    pub bubble: f64,
    pub cost: usize,
    pub ttfd: Option<u64>,
    pub engaged: Option<bool>,
    pub turns: usize,
    pub v_pre: Option<f64>,
    pub v_post: Option<f64>,
    pub dwell_initial: Option<f64>,
    pub dwell_blended: Option<f64>,
}

/// Index range strictly inside a phase's marks.
fn inside(model: &[(u64, Ev)], phase: Phase) -> (usize, usize) {
    let mut start = None;
    let mut end = model.len();
    for (i, (_, ev)) in model.iter().enumerate() {
        if let Ev::Mark(p, b) = ev {
            if *p == phase && *b == Boundary::Start && start.is_none() {
                start = Some(i);
            } else if *p == phase && *b == Boundary::End && start.is_some() {
                end = i;
                break;
            }
        }
    }
    (start.expect("phase present") + 1, end)
}

/// Entropy as log2(N) - (1/N) * sum(n_i * log2(n_i)).
fn entropy_of_counts(counts: &BTreeMap<&str, u64>) -> Option<f64> {
    let n: u64 = counts.values().sum();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let s: f64 = counts.values().filter(|&&c| c > 0).map(|&c| c as f64 * (c as f64).log2()).sum();
    Some((nf.log2() - s / nf).max(0.0))
}

fn velocity(model: &[(u64, Ev)], from: u64, to: u64) -> Option<f64> {
    let in_range: Vec<&(u64, Ev)> = model.iter().filter(|(t, _)| *t >= from && *t < to).collect();
    let mut runs: Vec<Vec<(u64, i64)>> = vec![Vec::new()];
    for (t, ev) in in_range {
        match ev {
            Ev::Scroll(px) => runs.last_mut().unwrap().push((*t, *px)),
            Ev::Refresh => runs.push(Vec::new()),
            _ => {}
        }
    }
    let mut dist = 0i64;
    let mut time = 0u64;
    for run in &runs {
        for w in run.windows(2) {
            dist += (w[1].1 - w[0].1).abs();
            time += w[1].0 - w[0].0;
        }
    }
    if time == 0 {
        None
    } else {
        Some(dist as f64 / (time as f64 / 1000.0))
    }
}

pub fn oracle(s: &Scenario) -> Expected {
    let m = &s.model;
    let (w0, w1) = inside(m, Phase::Warmup);
    let (x0, x1) = inside(m, Phase::Exploration);
    let explore = &m[x0..x1];
    let explore_start = m[x0 - 1].0;

    let mut browsed: BTreeSet<&str> = BTreeSet::new();
    for (_, ev) in explore {
        match ev {
            Ev::Enter { cat, .. } if s.browse_min == 0 => {
                browsed.insert(cat);
            }
            Ev::Exit { cat, dwell, .. } if s.browse_min > 0 && *dwell >= s.browse_min => {
                browsed.insert(cat);
            }
            _ => {}
        }
    }

    fn viewed(range: &[(u64, Ev)]) -> BTreeMap<&str, u64> {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for (_, ev) in range {
            if let Ev::Enter { cat, .. } = ev {
                *counts.entry(cat.as_str()).or_default() += 1;
            }
        }
        counts
    }
    let h_pre = entropy_of_counts(&viewed(&m[w0..w1]));
    let h_post = entropy_of_counts(&viewed(explore));
    let (h_pre, h_post) = match (h_pre, h_post) {
        (Some(a), Some(b)) => (Some(a), Some(b)),
        _ => (None, None),
    };

    let total: usize = s.initial_counts.values().sum();
    let under: Vec<&str> = CATS
        .iter()
        .copied()
        .filter(|c| (*s.initial_counts.get(*c).unwrap_or(&0) as f64) < s.threshold * total as f64)
        .collect();
    let bubble = if under.is_empty() {
        0.0
    } else {
        under.iter().filter(|c| browsed.contains(**c)).count() as f64 / under.len() as f64
    };

    let mut cost = 0;
    let mut turns = 0;
    let mut ttfd = None;
    let mut engaged = false;
    let mut adjust = None;
    let mut dwell: BTreeMap<Origin, Vec<u64>> = BTreeMap::new();
    for (t, ev) in explore {
        match ev {
            Ev::Search(n) | Ev::Text(n) => cost += n,
            _ => {}
        }
        if matches!(ev, Ev::Insight | Ev::Pick | Ev::Text(_)) {
            turns += 1;
        }
        if matches!(ev, Ev::Search(_) | Ev::Pick | Ev::Text(_)) && t - explore_start < s.engagement_window {
            engaged = true;
        }
        if let Ev::Exit { cat, dwell: d, origin, .. } = ev {
            if ttfd.is_none() && *d >= s.discovery_min && under.contains(&cat.as_str()) {
                ttfd = Some(t - explore_start);
            }
            dwell.entry(*origin).or_default().push(*d);
        }
        if adjust.is_none() && matches!(ev, Ev::Adjust) {
            adjust = Some(*t);
        }
    }
    let (v_pre, v_post) = match adjust {
        Some(a) => (
            velocity(m, a.saturating_sub(s.velocity_window), a),
            velocity(m, a, a + s.velocity_window),
        ),
        None => (None, None),
    };
    let mean = |o: Origin| {
        dwell
            .get(&o)
            .map(|v| v.iter().sum::<u64>() as f64 / v.len() as f64)
    };
    Expected {
        breadth: browsed.len(),
        h_pre,
        h_post,
        bubble,
        cost,
        ttfd,
        engaged: (s.condition != Condition::Feed).then_some(engaged),
        turns,
        v_pre,
        v_post,
        dwell_initial: mean(Origin::Initial),
        dwell_blended: mean(Origin::Blended),
    }
}

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}

/// Compares the library's measures to the oracle; `Err` names the first
/// mismatch.
pub fn check_scenario(s: &Scenario) -> Result<(), String> {
    let events = s.events();
    let got = feedscout::metrics::SessionMetrics::compute_with("oracle", &s.context(), &events)
        .map_err(|e| format!("compute failed: {e}"))?;
    let want = oracle(s);
    let mut bad = Vec::new();
    if got.breadth != want.breadth {
        bad.push(format!("breadth {} vs {}", got.breadth, want.breadth));
    }
    if !close(got.h_pre_bits, want.h_pre, 1e-9) || !close(got.h_post_bits, want.h_post, 1e-9) {
        bad.push(format!("entropy {:?}/{:?} vs {:?}/{:?}", got.h_pre_bits, got.h_post_bits, want.h_pre, want.h_post));
    }
    let want_delta = want.h_pre.zip(want.h_post).map(|(a, b)| b - a);
    if !close(got.diversity_gain_bits, want_delta, 1e-9) {
        bad.push(format!("delta {:?} vs {want_delta:?}", got.diversity_gain_bits));
    }
    if (got.bubble_breaking_rate - want.bubble).abs() > 1e-12 {
        bad.push(format!("bubble {} vs {}", got.bubble_breaking_rate, want.bubble));
    }
    if got.expression_cost_chars != want.cost {
        bad.push(format!("cost {} vs {}", got.expression_cost_chars, want.cost));
    }
    if got.time_to_first_discovery_ms != want.ttfd {
        bad.push(format!("ttfd {:?} vs {:?}", got.time_to_first_discovery_ms, want.ttfd));
    }
    if got.tool_engaged_first_5min != want.engaged {
        bad.push(format!("engaged {:?} vs {:?}", got.tool_engaged_first_5min, want.engaged));
    }
    if got.conversation_turns != want.turns {
        bad.push(format!("turns {} vs {}", got.conversation_turns, want.turns));
    }
    if !close(got.scroll_velocity_pre, want.v_pre, 1e-9) || !close(got.scroll_velocity_post, want.v_post, 1e-9) {
        bad.push(format!(
            "velocity {:?}/{:?} vs {:?}/{:?}",
            got.scroll_velocity_pre, got.scroll_velocity_post, want.v_pre, want.v_post
        ));
    }
    if !close(got.mean_dwell_initial_ms, want.dwell_initial, 1e-9)
        || !close(got.mean_dwell_blended_ms, want.dwell_blended, 1e-9)
    {
        bad.push("dwell by origin".into());
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad.join("; "))
    }
}
