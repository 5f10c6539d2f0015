//! One participant session: the feed, the dialogue, the provider and the
//! event log, driven by client inputs.
//!
//! Every input method validates first, then logs the input event, then any
//! events the engine derives from it (composition changes, assistant turns,
//! triggers, provider fallbacks, automatic refreshes). Derived events are
//! recomputed during [`replay`], so a log replays to the same bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{build_insight, should_trigger, TriggerOrigin};
use crate::condition::Condition;
use crate::config::{EngineConfig, SearchMode};
use crate::corpus::{generate_biased_feed, Corpus, FeedSpec, StandardFeed};
use crate::dialogue::{AssistantTurn, DialogueOutput, DialogueSession, Direction, Stage};
use crate::error::{Error, Result};
use crate::event_log::{
    BehaviorEvent, Boundary, ClickTarget, CorpusSource, EventData, EventStream, LoadedLog, LogHeader, LogWriter,
    Phase, Seeds, LOG_FORMAT,
};
use crate::feed::FeedState;
use crate::harness::search_corpus;
use crate::metrics::SessionMetrics;
use crate::provider::Provider;

/// Everything needed to start a session.
#[derive(Debug, Clone)]
pub struct SessionSetup {
    pub session_id: String,
    pub condition: Condition,
    pub participant_id: Option<String>,
    pub feed_label: Option<StandardFeed>,
    pub feed_spec: FeedSpec,
    pub seeds: Seeds,
    pub config: EngineConfig,
    pub corpus: CorpusSource,
    pub wall_clock_start_ms: Option<u64>,
}

impl SessionSetup {
    /// A session on one of the standard feeds with default configuration.
    pub fn standard(session_id: impl Into<String>, condition: Condition, feed: StandardFeed, seed: u64) -> Self {
        Self {
            session_id: session_id.into(),
            condition,
            participant_id: None,
            feed_label: Some(feed),
            feed_spec: feed.spec(),
            seeds: Seeds {
                feed: seed,
                session: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
            },
            config: EngineConfig::default(),
            corpus: CorpusSource::Synthetic { size: 320, seed: 7 },
            wall_clock_start_ms: None,
        }
    }
}

/// Messages pushed to the client outside the request/response flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Notification {
    /// The assistant opened with an insight and options.
    Trigger {
        origin: TriggerOrigin,
        reason: String,
        turns: Vec<AssistantTurn>,
    },
    /// A direction was applied; the next refresh starts blending.
    BlendConfirmed { direction: Direction, text: String },
}

/// What a client call produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Reply {
    /// Assistant turns produced by the call.
    pub turns: Vec<AssistantTurn>,
    pub notifications: Vec<Notification>,
    /// Number of events the call appended.
    pub appended: usize,
}

pub struct Session {
    header: LogHeader,
    corpus: Arc<Corpus>,
    categories: Vec<String>,
    feed: FeedState,
    dialogue: DialogueSession,
    stream: EventStream,
    writer: Option<LogWriter>,
    provider: Arc<dyn Provider>,
    last_auto_refresh_t: u64,
}

impl Session {
    pub fn new(setup: SessionSetup, corpus: Arc<Corpus>, provider: Arc<dyn Provider>) -> Result<Self> {
        setup.config.validate()?;
        let items = generate_biased_feed(&corpus, &setup.feed_spec, setup.seeds.feed)?;
        let header = LogHeader {
            format: LOG_FORMAT.to_string(),
            session_id: setup.session_id,
            condition: setup.condition,
            participant_id: setup.participant_id,
            feed_label: setup.feed_label,
            feed_spec: setup.feed_spec,
            seeds: setup.seeds,
            wall_clock_start_ms: setup.wall_clock_start_ms,
            corpus: setup.corpus,
            categories: corpus.category_ids(),
            initial_items: items.iter().map(|i| i.item_id.clone()).collect(),
            initial_counts: items.iter().fold(BTreeMap::new(), |mut acc, i| {
                *acc.entry(i.category.clone()).or_insert(0) += 1;
                acc
            }),
            config: setup.config,
        };
        Self::from_header(header, corpus, provider)
    }

    /// Rebuilds the starting state recorded in a log header.
    pub fn from_header(header: LogHeader, corpus: Arc<Corpus>, provider: Arc<dyn Provider>) -> Result<Self> {
        let items = header
            .initial_items
            .iter()
            .map(|id| {
                corpus
                    .item(id)
                    .cloned()
                    .ok_or_else(|| Error::Validation(format!("initial item `{id}` is not in the corpus")))
            })
            .collect::<Result<Vec<_>>>()?;
        let feed = FeedState::initialize(header.session_id.clone(), items, header.config.blend_rate)?
            .with_increase_purity(header.config.increase_purity)
            .with_underrep_threshold(header.config.underrep_threshold);
        Ok(Self {
            categories: corpus.category_ids(),
            dialogue: DialogueSession::new(header.session_id.clone()),
            stream: EventStream::new(header.session_id.clone()),
            header,
            corpus,
            feed,
            writer: None,
            provider,
            last_auto_refresh_t: 0,
        })
    }

    /// Starts persisting to `path`: the header and any events so far are
    /// written immediately, later events as they happen.
    pub fn log_to(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = LogWriter::create(path, &self.header)?;
        for e in self.stream.events() {
            writer.append(e)?;
        }
        self.writer = Some(writer);
        Ok(())
    }

    /// Flushes and closes the log file, if any.
    pub fn close(&mut self) -> Result<()> {
        match self.writer.take() {
            Some(w) => w.finish(),
            None => Ok(()),
        }
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn session_id(&self) -> &str {
        &self.header.session_id
    }

    pub fn condition(&self) -> Condition {
        self.header.condition
    }

    pub fn config(&self) -> &EngineConfig {
        &self.header.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn feed(&self) -> &FeedState {
        &self.feed
    }

    pub fn dialogue(&self) -> &DialogueSession {
        &self.dialogue
    }

    pub fn stream(&self) -> &EventStream {
        &self.stream
    }

    pub fn events(&self) -> &[BehaviorEvent] {
        self.stream.events()
    }

    pub fn phase(&self) -> Option<Phase> {
        self.stream.current_phase()
    }

    pub fn last_t(&self) -> u64 {
        self.stream.last_t()
    }

    pub fn metrics(&self) -> Result<SessionMetrics> {
        SessionMetrics::compute(&self.header, self.stream.events())
    }

    fn log(&mut self, t: u64, data: EventData, reply: &mut Reply) -> Result<()> {
        let event = self.stream.append(t, data)?;
        if let Some(w) = self.writer.as_mut() {
            w.append(event)?;
        }
        reply.appended += 1;
        Ok(())
    }

    fn log_outputs(&mut self, t: u64, outputs: Vec<DialogueOutput>, reply: &mut Reply) -> Result<Vec<AssistantTurn>> {
        let mut turns = Vec::new();
        for out in outputs {
            self.log(t, out.to_event(), reply)?;
            if let DialogueOutput::Turn(turn) = out {
                turns.push(turn);
            }
        }
        Ok(turns)
    }

    fn check_time(&self, t: u64) -> Result<()> {
        let last = self.stream.last_t();
        if t < last {
            return Err(Error::Monotonicity { t_ms: t, last_ms: last });
        }
        Ok(())
    }

    fn require_tool(&self, allowed: bool, tool: &str) -> Result<()> {
        if !allowed {
            return Err(Error::Capability(format!(
                "{tool} is not available in the {} condition",
                self.condition()
            )));
        }
        if self.phase() == Some(Phase::Warmup) {
            return Err(Error::Capability(format!("{tool} is not available during warm-up")));
        }
        Ok(())
    }

    /// Runs the engine's follow-ups to an input at time `t`.
    fn after_input(&mut self, t: u64, reply: &mut Reply) -> Result<()> {
        self.auto_refresh(t, reply)?;
        self.maybe_trigger(t, reply)
    }

    fn auto_refresh(&mut self, t: u64, reply: &mut Reply) -> Result<()> {
        let interval = self.header.config.auto_refresh_ms;
        if interval == 0 {
            return Ok(());
        }
        while self.last_auto_refresh_t + interval <= t {
            self.last_auto_refresh_t += interval;
            self.do_refresh(t, true, reply)?;
        }
        Ok(())
    }

    fn maybe_trigger(&mut self, t: u64, reply: &mut Reply) -> Result<()> {
        if !self.condition().ai_initiates() || self.dialogue.is_active() || self.phase() == Some(Phase::Warmup) {
            return Ok(());
        }
        let analyzer = self.header.config.analyzer();
        let decision = should_trigger(self.stream.events(), self.header.config.proactivity, &analyzer);
        let Some(origin) = decision.origin.filter(|_| decision.fire) else {
            return Ok(());
        };
        self.log(
            t,
            EventData::Trigger {
                origin,
                policy: self.header.config.proactivity,
                reason: decision.reason.clone(),
            },
            reply,
        )?;
        let insight = build_insight(&self.feed, self.stream.events(), &self.categories, &analyzer);
        let outputs = self
            .dialogue
            .open_dialogue_ai(insight, self.provider.as_ref(), &self.categories)?;
        let turns = self.log_outputs(t, outputs, reply)?;
        reply.turns.extend(turns.iter().cloned());
        reply.notifications.push(Notification::Trigger {
            origin,
            reason: decision.reason,
            turns,
        });
        Ok(())
    }

    fn confirm_if_blending(&mut self, t: u64, reply: &mut Reply) -> Result<()> {
        if self.dialogue.stage != Stage::Blending {
            return Ok(());
        }
        let (outputs, change) =
            self.dialogue
                .confirm_blend(&mut self.feed, &self.corpus, self.provider.as_ref())?;
        self.log(t, change, reply)?;
        let turns = self.log_outputs(t, outputs, reply)?;
        if let Some(turn) = turns.iter().find(|t| t.direction.is_some()) {
            reply.notifications.push(Notification::BlendConfirmed {
                direction: turn.direction.clone().expect("checked above"),
                text: turn.text.clone(),
            });
        }
        reply.turns.extend(turns);
        Ok(())
    }

    pub fn phase_mark(&mut self, t: u64, phase: Phase, boundary: Boundary) -> Result<Reply> {
        self.check_time(t)?;
        let mut reply = Reply::default();
        self.log(t, EventData::PhaseMark { phase, boundary }, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    pub fn impression_enter(&mut self, t: u64, item_id: &str) -> Result<Reply> {
        self.check_time(t)?;
        let data = self.feed.record_impression(item_id, t)?;
        let mut reply = Reply::default();
        self.log(t, data, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    pub fn impression_exit(&mut self, t: u64, item_id: &str) -> Result<Reply> {
        self.check_time(t)?;
        let data = self.feed.close_impression(item_id, t)?;
        let mut reply = Reply::default();
        self.log(t, data, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    pub fn scroll(&mut self, t: u64, position_px: i64) -> Result<Reply> {
        self.check_time(t)?;
        let data = self.feed.record_scroll(position_px, t)?;
        let mut reply = Reply::default();
        self.log(t, data, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    /// A click on a card, the search bar, or the assistant affordance.
    pub fn click(&mut self, t: u64, target: ClickTarget, item_id: Option<&str>) -> Result<Reply> {
        self.check_time(t)?;
        match target {
            ClickTarget::AssistantButton | ClickTarget::ChatPanel => self.open_assistant(t),
            ClickTarget::SearchBar => {
                self.require_tool(self.condition().has_search(), "search")?;
                let mut reply = Reply::default();
                self.log(t, EventData::Click { target, item_id: None }, &mut reply)?;
                self.after_input(t, &mut reply)?;
                Ok(reply)
            }
            ClickTarget::Item => {
                let id = item_id.ok_or_else(|| Error::Validation("item click without item_id".into()))?;
                let known = self.feed.items().iter().chain(self.feed.search_block()).any(|fi| fi.item.item_id == id);
                if !known {
                    return Err(Error::Validation(format!("item `{id}` is not in the feed")));
                }
                let mut reply = Reply::default();
                self.log(
                    t,
                    EventData::Click {
                        target,
                        item_id: Some(id.to_string()),
                    },
                    &mut reply,
                )?;
                self.after_input(t, &mut reply)?;
                Ok(reply)
            }
        }
    }

    /// Opens the assistant panel. Under AI_INIT this is an explicit request
    /// for an insight; under USER_CHAT it just shows the idle prompt. A
    /// click while a dialogue is already open changes nothing.
    pub fn open_assistant(&mut self, t: u64) -> Result<Reply> {
        self.check_time(t)?;
        self.require_tool(self.condition().has_chat(), "the assistant")?;
        let mut reply = Reply::default();
        if self.dialogue.is_active() {
            return Ok(reply);
        }
        let target = if self.condition().ai_initiates() {
            ClickTarget::AssistantButton
        } else {
            ClickTarget::ChatPanel
        };
        self.log(t, EventData::Click { target, item_id: None }, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    /// Pull-to-refresh. When fewer unsurfaced slots remain than a refresh
    /// needs, the feed starts a new pass from the top first.
    pub fn refresh(&mut self, t: u64) -> Result<Reply> {
        self.check_time(t)?;
        let mut reply = Reply::default();
        self.do_refresh(t, false, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    fn do_refresh(&mut self, t: u64, auto: bool, reply: &mut Reply) -> Result<()> {
        let seed = self.header.seeds.session.wrapping_add(self.feed.refresh_count());
        let new_pass = self.feed.replaceable_slots() < self.feed.replacement_count();
        let before = self.feed.clone();
        if new_pass {
            self.feed.start_new_pass();
        }
        let change = match self.feed.refresh_feed(&self.corpus, seed) {
            Ok(change) => change,
            Err(e) => {
                self.feed = before;
                return Err(e);
            }
        };
        self.log(t, EventData::Refresh { seed, new_pass, auto }, reply)?;
        self.log(t, change, reply)
    }

    pub fn select_option(&mut self, t: u64, option_id: &str) -> Result<Reply> {
        self.check_time(t)?;
        self.require_tool(self.condition().has_chat(), "the assistant")?;
        if !matches!(self.dialogue.stage, Stage::AwaitingResponse | Stage::Narrowing) {
            return Err(Error::State(format!(
                "cannot select an option in stage {:?}",
                self.dialogue.stage
            )));
        }
        let label = self
            .dialogue
            .presented_options
            .iter()
            .find(|o| o.option_id == option_id)
            .map(|o| o.label.clone())
            .ok_or_else(|| Error::Validation(format!("option `{option_id}` is not on offer")))?;
        let outputs = self
            .dialogue
            .select_option(option_id, self.provider.as_ref(), &self.categories)?;
        let mut reply = Reply::default();
        self.log(
            t,
            EventData::OptionSelect {
                option_id: option_id.to_string(),
                label,
                chars: 0,
            },
            &mut reply,
        )?;
        let turns = self.log_outputs(t, outputs, &mut reply)?;
        reply.turns.extend(turns);
        self.confirm_if_blending(t, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    /// A typed chat message. With no dialogue open it starts a
    /// user-initiated cycle.
    pub fn send_text(&mut self, t: u64, text: &str) -> Result<Reply> {
        self.check_time(t)?;
        self.require_tool(self.condition().has_chat(), "the assistant")?;
        if text.trim().is_empty() {
            return Err(Error::Validation("message is empty".into()));
        }
        let outputs = if matches!(
            self.dialogue.stage,
            Stage::AwaitingResponse | Stage::Narrowing | Stage::Blending
        ) {
            self.dialogue
                .submit_free_text(text, self.provider.as_ref(), &self.categories)?
        } else {
            self.dialogue
                .open_dialogue_user(text, self.provider.as_ref(), &self.categories)?
        };
        let mut reply = Reply::default();
        self.log(
            t,
            EventData::FreeText {
                text: text.to_string(),
                chars: text.chars().count(),
            },
            &mut reply,
        )?;
        let turns = self.log_outputs(t, outputs, &mut reply)?;
        reply.turns.extend(turns);
        self.confirm_if_blending(t, &mut reply)?;
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    /// Closes the assistant panel. Dismissing twice is a no-op.
    pub fn dismiss(&mut self, t: u64) -> Result<Reply> {
        self.check_time(t)?;
        self.require_tool(self.condition().has_chat(), "the assistant")?;
        let stage = self.dialogue.stage;
        let mut reply = Reply::default();
        if self.dialogue.dismiss()? {
            self.log(t, EventData::Dismiss { stage }, &mut reply)?;
            self.after_input(t, &mut reply)?;
        }
        Ok(reply)
    }

    /// Runs a search and shows the results (SEARCH only).
    pub fn search(&mut self, t: u64, query: &str) -> Result<Reply> {
        self.check_time(t)?;
        self.require_tool(self.condition().has_search(), "search")?;
        let in_feed: Vec<&str> = self.feed.items().iter().map(|fi| fi.item.item_id.as_str()).collect();
        let results: Vec<_> = search_corpus(&self.corpus, query)?
            .into_iter()
            .filter(|it| !in_feed.contains(&it.item_id.as_str()) && !self.feed.has_open_impression(&it.item_id))
            .take(self.header.config.search_results)
            .collect();
        let mut reply = Reply::default();
        self.log(
            t,
            EventData::SearchQuery {
                query: query.to_string(),
                chars: query.chars().count(),
                result_count: results.len(),
            },
            &mut reply,
        )?;
        match self.header.config.search_mode {
            SearchMode::Supplement => self.feed.set_search_block(results),
            SearchMode::Replace => {
                let change = self.feed.replace_with_search(results);
                self.log(t, change, &mut reply)?;
            }
        }
        self.after_input(t, &mut reply)?;
        Ok(reply)
    }

    pub fn survey(&mut self, t: u64, answers: BTreeMap<String, i64>) -> Result<Reply> {
        self.check_time(t)?;
        let mut reply = Reply::default();
        self.log(t, EventData::SurveyResponse { answers }, &mut reply)?;
        Ok(reply)
    }

    /// Advances the clock without an input, running automatic refreshes
    /// that fall due.
    pub fn tick(&mut self, t: u64) -> Result<Reply> {
        self.check_time(t)?;
        let mut reply = Reply::default();
        self.auto_refresh(t, &mut reply)?;
        if reply.appended > 0 {
            self.maybe_trigger(t, &mut reply)?;
        }
        Ok(reply)
    }

    /// Re-applies one logged input event. Derived events are ignored.
    pub fn apply(&mut self, event: &BehaviorEvent) -> Result<Reply> {
        let t = event.t_ms;
        match &event.data {
            d if d.is_derived() => {
                // Automatic refreshes are regenerated by the inputs that
                // follow them; make sure one without a following input is
                // not lost.
                if matches!(d, EventData::Refresh { auto: true, .. }) {
                    return self.tick(t);
                }
                Ok(Reply::default())
            }
            EventData::ImpressionEnter { item_id, .. } => self.impression_enter(t, item_id),
            EventData::ImpressionExit { item_id, .. } => self.impression_exit(t, item_id),
            EventData::Scroll { position_px } => self.scroll(t, *position_px),
            EventData::Click { target, item_id } => self.click(t, *target, item_id.as_deref()),
            EventData::Refresh { .. } => self.refresh(t),
            EventData::OptionSelect { option_id, .. } => self.select_option(t, option_id),
            EventData::FreeText { text, .. } => self.send_text(t, text),
            EventData::Dismiss { .. } => self.dismiss(t),
            EventData::SearchQuery { query, .. } => self.search(t, query),
            EventData::SurveyResponse { answers } => self.survey(t, answers.clone()),
            EventData::PhaseMark { phase, boundary } => self.phase_mark(t, *phase, *boundary),
            _ => unreachable!("derived events are handled above"),
        }
    }
}

/// Rebuilds a session from its log by re-applying every input event.
pub fn replay(log: &LoadedLog, corpus: Arc<Corpus>, provider: Arc<dyn Provider>) -> Result<Session> {
    let header = log
        .header
        .clone()
        .ok_or_else(|| Error::Validation("log has no header".into()))?;
    let mut session = Session::from_header(header, corpus, provider)?;
    for event in log.stream.events() {
        session.apply(event).map_err(|e| {
            Error::Validation(format!("replay failed at seq {}: {e}", event.seq))
        })?;
    }
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::TemplateProvider;

    fn session(condition: Condition) -> Session {
        let setup = SessionSetup::standard("s1", condition, StandardFeed::A, 3);
        let corpus = Arc::new(setup.corpus.load().unwrap());
        Session::new(setup, corpus, Arc::new(TemplateProvider)).unwrap()
    }

    fn browse(s: &mut Session, n: usize, t: &mut u64) -> Vec<Reply> {
        let ids: Vec<String> = s.feed().items().iter().map(|fi| fi.item.item_id.clone()).collect();
        let mut replies = Vec::new();
        for id in ids.iter().skip(s.feed().cursor()).take(n) {
            replies.push(s.impression_enter(*t, id).unwrap());
            *t += 1500;
            replies.push(s.impression_exit(*t, id).unwrap());
        }
        replies
    }

    #[test]
    fn ai_init_triggers_on_twentieth_item() {
        let mut s = session(Condition::AiInit);
        let mut t = 0;
        s.phase_mark(0, Phase::Exploration, Boundary::Start).unwrap();
        let replies = browse(&mut s, 20, &mut t);
        let fired: Vec<usize> = replies
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.notifications.is_empty())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(fired, [38], "fires on the 20th impression_enter");
        assert_eq!(s.dialogue().stage, Stage::AwaitingResponse);
    }

    #[test]
    fn user_chat_never_triggers() {
        let mut s = session(Condition::UserChat);
        let mut t = 0;
        s.phase_mark(0, Phase::Exploration, Boundary::Start).unwrap();
        let replies = browse(&mut s, 30, &mut t);
        assert!(replies.iter().all(|r| r.notifications.is_empty()));
        let r = s.send_text(t, "more travel please").unwrap();
        assert!(matches!(r.notifications[0], Notification::BlendConfirmed { .. }));
    }

    #[test]
    fn capability_gating() {
        let mut feed = session(Condition::Feed);
        assert_eq!(feed.search(0, "travel").unwrap_err().code(), "capability");
        assert_eq!(feed.send_text(0, "hi").unwrap_err().code(), "capability");
        let mut search = session(Condition::Search);
        search.phase_mark(0, Phase::Warmup, Boundary::Start).unwrap();
        assert_eq!(search.search(1, "travel").unwrap_err().code(), "capability");
        search.phase_mark(2, Phase::Warmup, Boundary::End).unwrap();
        let r = search.search(3, "travel").unwrap();
        assert_eq!(r.appended, 1);
        assert_eq!(search.feed().search_block().len(), 10);
    }

    #[test]
    fn refresh_starts_new_pass_when_feed_is_exhausted() {
        let mut s = session(Condition::Feed);
        let mut t = 0;
        browse(&mut s, 35, &mut t);
        s.refresh(t).unwrap();
        match &s.events()[s.events().len() - 2].data {
            EventData::Refresh { new_pass, .. } => assert!(*new_pass),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replay_reproduces_the_log() {
        let mut s = session(Condition::AiInit);
        let mut t = 0;
        s.phase_mark(0, Phase::Exploration, Boundary::Start).unwrap();
        browse(&mut s, 20, &mut t);
        let opt = s.dialogue().presented_options[0].option_id.clone();
        s.select_option(t, &opt).unwrap();
        let refine = s.dialogue().presented_options.first().map(|o| o.option_id.clone());
        if let Some(r) = refine {
            s.select_option(t + 10, &r).unwrap();
        }
        s.refresh(t + 20).unwrap();
        let mut buf = Vec::new();
        crate::event_log::write_log(&mut buf, Some(s.header()), s.stream()).unwrap();
        let loaded = crate::event_log::parse_log(std::str::from_utf8(&buf).unwrap()).unwrap();
        let corpus = Arc::new(loaded.header.as_ref().unwrap().corpus.load().unwrap());
        let again = replay(&loaded, corpus, Arc::new(TemplateProvider)).unwrap();
        assert_eq!(again.events(), s.events());
        assert_eq!(again.feed(), s.feed());
        assert_eq!(again.dialogue(), s.dialogue());
    }
}
