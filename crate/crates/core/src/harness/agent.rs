//! Simulated participants.
//!
//! An agent scrolls the feed item by item. Dwell time scales with its
//! interest in the item's category and shrinks each time it sees the same
//! item again. A run of already-seen items makes the agent bored; what it
//! does then depends on its kind.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::dialogue::{OptionKind, Stage};
use crate::error::{Error, Result};
use crate::event_log::{Boundary, ClickTarget, Phase};
use crate::session::{Notification, Reply, Session};
use crate::taxonomy::category_info;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Only scrolls and refreshes.
    PassiveScroller,
    /// Searches for a topic that comes to mind when bored.
    Searcher,
    /// May open the chat and type requests when bored.
    ChatInitiator,
    /// Answers every assistant prompt by clicking an option.
    OptionClicker,
}

impl AgentKind {
    /// The agent used for each condition in simulated studies.
    pub fn for_condition(condition: Condition) -> Self {
        match condition {
            Condition::Feed => AgentKind::PassiveScroller,
            Condition::Search => AgentKind::Searcher,
            Condition::UserChat => AgentKind::ChatInitiator,
            Condition::AiInit => AgentKind::OptionClicker,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::PassiveScroller => "passive_scroller",
            AgentKind::Searcher => "searcher",
            AgentKind::ChatInitiator => "chat_initiator",
            AgentKind::OptionClicker => "option_clicker",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub kind: AgentKind,
    /// Relative interest per category; missing categories use
    /// `default_interest`.
    pub interest: BTreeMap<String, f64>,
    pub default_interest: f64,
    /// Categories the agent already gets plenty of and never asks for.
    pub familiar: Vec<String>,
    /// The category the agent is drawn to without knowing it.
    pub latent: String,
    /// Chance that a chat initiator uses the chat at all.
    pub engage_probability: f64,
    /// Consecutive already-seen items before the agent gets bored.
    pub boredom_threshold: usize,
    /// Mean dwell on a first view at interest 1.0.
    pub base_dwell_ms: u64,
    /// Most tool actions (searches, messages, assistant requests) per session.
    pub max_tool_uses: usize,
}

impl AgentPolicy {
    pub const DOMINANT_INTEREST: f64 = 1.0;
    pub const LATENT_INTEREST: f64 = 3.0;
    pub const OTHER_INTEREST: f64 = 0.5;

    /// The shipped policy for a feed: the feed's dominant categories at
    /// interest 1, a latent interest drawn from the categories present in the
    /// feed below `underrep_threshold`, everything else at 0.5.
    pub fn for_feed(
        kind: AgentKind,
        initial_counts: &BTreeMap<String, usize>,
        dominant: &[String],
        underrep_threshold: f64,
        seed: u64,
    ) -> Result<Self> {
        let total: usize = initial_counts.values().sum();
        let mut rare: Vec<&String> = initial_counts
            .iter()
            .filter(|(c, n)| !dominant.contains(c) && **n > 0 && (**n as f64 / total as f64) < underrep_threshold)
            .map(|(c, _)| c)
            .collect();
        rare.sort();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1A7E_17);
        let latent = rare
            .choose(&mut rng)
            .map(|c| c.to_string())
            .ok_or_else(|| Error::Validation("feed has no underrepresented category for a latent interest".into()))?;
        let mut interest: BTreeMap<String, f64> =
            dominant.iter().map(|c| (c.clone(), Self::DOMINANT_INTEREST)).collect();
        interest.insert(latent.clone(), Self::LATENT_INTEREST);
        let policy = Self {
            kind,
            interest,
            default_interest: Self::OTHER_INTEREST,
            familiar: dominant.to_vec(),
            latent,
            engage_probability: 0.5,
            boredom_threshold: 12,
            base_dwell_ms: 1500,
            max_tool_uses: 2,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.default_interest < 0.0 || self.interest.values().any(|w| !(*w >= 0.0)) {
            return Err(Error::Validation("interest weights must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.engage_probability) {
            return Err(Error::Validation("engage_probability must be in [0, 1]".into()));
        }
        if self.boredom_threshold == 0 || self.base_dwell_ms == 0 {
            return Err(Error::Validation("boredom_threshold and base_dwell_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn interest_in(&self, category: &str) -> f64 {
        self.interest.get(category).copied().unwrap_or(self.default_interest)
    }
}

/// A word the agent would use for a category.
fn topic_word(category: &str) -> String {
    category_info(category)
        .map(|c| c.synonyms[0].to_string())
        .unwrap_or_else(|| category.replace('_', " "))
}

const PURSUE_MESSAGES: [&str; 4] = [
    "My feed feels a bit repetitive lately, could you show me more {} posts?",
    "I've been curious about {} recently, can you mix some of it into my feed?",
    "Honestly I would love to see more {} content here instead of the usual",
    "Could you find me some nice {} posts? I keep scrolling past the same ones",
];
const SURPRISE_MESSAGES: [&str; 3] = [
    "Can you show me something different from what I usually see in this feed?",
    "Surprise me with topics I would never think to look for on my own, please",
    "I'd like to discover something new today, anything outside my usual stuff",
];

/// Wall-clock bounds of one simulated session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub warmup_ms: u64,
    pub explore_ms: u64,
}

/// Shortest look at a card that scrolls into view.
const GLANCE_MS: (u64, u64) = (500, 900);

/// Approximate card height in a two-column grid, in pixels per row.
const ROW_PX: i64 = 320;

pub struct Agent {
    policy: AgentPolicy,
    categories: Vec<String>,
    rng: ChaCha8Rng,
    views: BTreeMap<String, u32>,
    viewed_block: BTreeSet<String>,
    stale_streak: usize,
    engaged: bool,
    tool_uses: usize,
    pursued: BTreeSet<String>,
    searched: Vec<String>,
    tool_ready_at: u64,
    t: u64,
}

impl Agent {
    /// An agent for a corpus with the given categories.
    pub fn new(policy: AgentPolicy, categories: Vec<String>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let engaged = match policy.kind {
            AgentKind::ChatInitiator => rng.gen_bool(policy.engage_probability),
            _ => true,
        };
        let tool_ready_at = rng.gen_range(20_000..180_000);
        Self {
            policy,
            categories,
            rng,
            views: BTreeMap::new(),
            viewed_block: BTreeSet::new(),
            stale_streak: 0,
            engaged,
            tool_uses: 0,
            pursued: BTreeSet::new(),
            searched: Vec::new(),
            tool_ready_at,
            t: 0,
        }
    }

    pub fn policy(&self) -> &AgentPolicy {
        &self.policy
    }

    /// Whether a chat initiator decided to use the chat.
    pub fn engaged(&self) -> bool {
        self.engaged
    }

    /// Drives `session` through warm-up and exploration with phase marks.
    pub fn run(&mut self, session: &mut Session, schedule: Schedule) -> Result<()> {
        self.t = session.last_t();
        let start = self.t;
        session.phase_mark(self.t, Phase::Warmup, Boundary::Start)?;
        while self.t < start + schedule.warmup_ms {
            self.view_next(session)?;
        }
        session.phase_mark(self.t, Phase::Warmup, Boundary::End)?;
        session.phase_mark(self.t, Phase::Exploration, Boundary::Start)?;
        let explore_start = self.t;
        self.tool_ready_at += explore_start;
        self.stale_streak = 0;
        while self.t < explore_start + schedule.explore_ms {
            if !self.act(session)? {
                self.view_next(session)?;
            }
        }
        session.phase_mark(self.t, Phase::Exploration, Boundary::End)?;
        Ok(())
    }

    fn pause(&mut self, lo: u64, hi: u64) {
        self.t += self.rng.gen_range(lo..=hi);
    }

    fn typing_ms(&mut self, text: &str) -> u64 {
        text.chars().count() as u64 * self.rng.gen_range(180..=260)
    }

    /// Shows the next unseen search result, else the next feed item, else
    /// pulls to refresh.
    fn view_next(&mut self, session: &mut Session) -> Result<()> {
        let feed = session.feed();
        let block = feed.search_block();
        let next = block
            .iter()
            .enumerate()
            .find(|(_, fi)| !self.viewed_block.contains(&fi.item.item_id))
            .map(|(i, fi)| (i, fi.item.item_id.clone(), fi.item.category.clone()))
            .or_else(|| {
                let c = feed.cursor();
                feed.items()
                    .get(c)
                    .map(|fi| (block.len() + c, fi.item.item_id.clone(), fi.item.category.clone()))
            });
        let Some((slot, id, category)) = next else {
            session.refresh(self.t)?;
            self.pause(800, 1600);
            return Ok(());
        };
        if slot < block.len() {
            self.viewed_block.insert(id.clone());
        }
        session.scroll(self.t, (slot as i64 / 2) * ROW_PX)?;
        self.pause(250, 700);
        session.impression_enter(self.t, &id)?;
        let seen = self.views.entry(id.clone()).or_insert(0);
        let habituation = 1.0 / (1.0 + f64::from(*seen));
        *seen += 1;
        self.stale_streak = if *seen == 1 { 0 } else { self.stale_streak + 1 };
        let mean = self.policy.base_dwell_ms as f64 * self.policy.interest_in(&category) * habituation;
        let glance = self.rng.gen_range(GLANCE_MS.0..=GLANCE_MS.1) as f64;
        let dwell = (mean * self.rng.gen_range(0.6..1.4)).max(glance) as u64;
        self.t += dwell;
        session.impression_exit(self.t, &id)?;
        self.pause(100, 300);
        Ok(())
    }

    /// Picks a category the agent might think of when asked what it wants:
    /// a non-dominant one, weighted by interest. The latent interest is never
    /// known to the agent, but its higher weight makes it come to mind more
    /// often.
    fn sample_topic(&mut self, exclude: &[String]) -> Option<String> {
        let candidates: Vec<(&String, f64)> = self
            .categories
            .iter()
            .filter(|c| !exclude.contains(c) && !self.policy.familiar.contains(c))
            .map(|c| (c, self.policy.interest_in(c)))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        candidates
            .choose_weighted(&mut self.rng, |(_, w)| *w)
            .ok()
            .map(|(c, _)| c.to_string())
    }

    fn bored(&self) -> bool {
        self.stale_streak >= self.policy.boredom_threshold
    }

    /// Takes at most one tool action. Returns whether it did.
    fn act(&mut self, session: &mut Session) -> Result<bool> {
        match self.policy.kind {
            AgentKind::PassiveScroller => Ok(false),
            AgentKind::Searcher => self.act_searcher(session),
            AgentKind::ChatInitiator => self.act_chat(session),
            AgentKind::OptionClicker => self.act_options(session),
        }
    }

    fn act_searcher(&mut self, session: &mut Session) -> Result<bool> {
        if !self.bored() || self.tool_uses >= self.policy.max_tool_uses || self.t < self.tool_ready_at {
            return Ok(false);
        }
        let Some(category) = self.sample_topic(&self.searched.clone()) else {
            return Ok(false);
        };
        let query = topic_word(&category);
        session.click(self.t, ClickTarget::SearchBar, None)?;
        self.t += self.typing_ms(&query);
        session.search(self.t, &query)?;
        self.pause(500, 1200);
        self.searched.push(category);
        self.viewed_block.clear();
        self.tool_uses += 1;
        self.stale_streak = 0;
        Ok(true)
    }

    fn act_chat(&mut self, session: &mut Session) -> Result<bool> {
        let stage = session.dialogue().stage;
        if matches!(stage, Stage::AwaitingResponse | Stage::Narrowing) {
            // Answer whatever the assistant asked with the first offer, or
            // rephrase if it only asked a question.
            return match session.dialogue().presented_options.first().map(|o| o.option_id.clone()) {
                Some(id) => {
                    self.pause(2000, 5000);
                    let reply = session.select_option(self.t, &id)?;
                    self.after_reply(session, &reply)?;
                    Ok(true)
                }
                None => self.type_message(session, false),
            };
        }
        if !self.engaged || self.tool_uses >= self.policy.max_tool_uses || self.t < self.tool_ready_at {
            return Ok(false);
        }
        if self.tool_uses > 0 && !self.bored() {
            return Ok(false);
        }
        session.open_assistant(self.t)?;
        self.pause(1000, 3000);
        let surprise = self.tool_uses > 0;
        self.type_message(session, surprise)
    }

    fn type_message(&mut self, session: &mut Session, surprise: bool) -> Result<bool> {
        let topic = if surprise { None } else { self.sample_topic(&[]) };
        let text = match topic {
            Some(category) => PURSUE_MESSAGES
                .choose(&mut self.rng)
                .expect("non-empty")
                .replace("{}", &topic_word(&category)),
            None => SURPRISE_MESSAGES.choose(&mut self.rng).expect("non-empty").to_string(),
        };
        self.t += self.typing_ms(&text);
        let reply = session.send_text(self.t, &text)?;
        self.tool_uses += 1;
        self.after_reply(session, &reply)?;
        Ok(true)
    }

    fn act_options(&mut self, session: &mut Session) -> Result<bool> {
        let stage = session.dialogue().stage;
        if matches!(stage, Stage::AwaitingResponse | Stage::Narrowing) {
            let options = session.dialogue().presented_options.clone();
            let pick = if stage == Stage::Narrowing {
                options.choose(&mut self.rng).cloned()
            } else {
                options
                    .iter()
                    .filter(|o| o.kind == OptionKind::PursueSignal)
                    .filter(|o| o.direction.target_categories.iter().all(|c| !self.pursued.contains(c)))
                    .max_by(|a, b| {
                        let w = |o: &crate::dialogue::ExplorationOption| {
                            o.direction
                                .target_categories
                                .iter()
                                .map(|c| self.policy.interest_in(c))
                                .fold(0.0, f64::max)
                        };
                        w(a).total_cmp(&w(b)).then_with(|| b.option_id.cmp(&a.option_id))
                    })
                    .or_else(|| options.iter().find(|o| o.kind == OptionKind::Surprise))
                    .or_else(|| options.first())
                    .cloned()
            };
            let Some(pick) = pick else {
                return Ok(false);
            };
            self.pause(2500, 6000);
            self.pursued.extend(pick.direction.target_categories.iter().cloned());
            let reply = session.select_option(self.t, &pick.option_id)?;
            self.after_reply(session, &reply)?;
            return Ok(true);
        }
        let prompted_before = session.dialogue().cycle > 0;
        if prompted_before && self.bored() && self.tool_uses < self.policy.max_tool_uses {
            session.open_assistant(self.t)?;
            self.tool_uses += 1;
            self.stale_streak = 0;
            self.pause(500, 1500);
            return Ok(true);
        }
        Ok(false)
    }

    /// After a blend is confirmed, pull to refresh to see it.
    fn after_reply(&mut self, session: &mut Session, reply: &Reply) -> Result<()> {
        if reply
            .notifications
            .iter()
            .any(|n| matches!(n, Notification::BlendConfirmed { .. }))
        {
            self.pause(800, 2000);
            session.refresh(self.t)?;
            self.stale_streak = 0;
            self.pause(800, 1600);
        }
        Ok(())
    }
}
