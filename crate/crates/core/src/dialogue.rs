//! The exploration dialogue: insight, options, at most one narrowing round,
//! then blending toward the chosen direction.
//!
//! ```text
//! Idle ──show_insight──▶ InsightShown ──present_options──▶ AwaitingResponse
//! AwaitingResponse ──select_option──▶ Narrowing | Blending
//! Narrowing ──select_option / free text──▶ Blending
//! Blending ──confirm_blend──▶ Idle (with history)
//! any stage but Idle ──dismiss──▶ Dismissed
//! ```
//!
//! A new cycle can start from Idle or Dismissed; each cycle gets its own
//! narrowing budget of one round.

use serde::{Deserialize, Serialize};

use crate::analysis::InsightReport;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::event_log::EventData;
use crate::feed::FeedState;
use crate::provider::{ask, Provider, ProviderRequest, ProviderTag, RequestKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMode {
    Increase,
    Decrease,
    Surprise,
}

/// Where the user wants the feed to go.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub mode: DirectionMode,
    pub target_categories: Vec<String>,
    /// Sub-topic token within the single target category.
    pub refinement: Option<String>,
}

impl Direction {
    pub fn increase(category: &str) -> Self {
        Self {
            mode: DirectionMode::Increase,
            target_categories: vec![category.to_string()],
            refinement: None,
        }
    }

    pub fn decrease(category: &str) -> Self {
        Self {
            mode: DirectionMode::Decrease,
            target_categories: vec![category.to_string()],
            refinement: None,
        }
    }

    pub fn surprise() -> Self {
        Self {
            mode: DirectionMode::Surprise,
            target_categories: Vec::new(),
            refinement: None,
        }
    }

    pub fn refined(mut self, token: &str) -> Self {
        self.refinement = Some(token.to_string());
        self
    }

    pub fn validate(&self, categories: &[String]) -> Result<()> {
        match self.mode {
            DirectionMode::Surprise if !self.target_categories.is_empty() || self.refinement.is_some() => {
                Err(Error::Validation("a surprise direction takes no targets".into()))
            }
            DirectionMode::Increase | DirectionMode::Decrease if self.target_categories.is_empty() => {
                Err(Error::Validation("increase/decrease needs a target category".into()))
            }
            _ => {
                if let Some(c) = self.target_categories.iter().find(|c| !categories.contains(c)) {
                    return Err(Error::Validation(format!("unknown category `{c}`")));
                }
                Ok(())
            }
        }
    }

    /// Whether an option with this direction gets a narrowing round.
    pub fn admits_refinement(&self) -> bool {
        self.mode != DirectionMode::Surprise && self.refinement.is_none() && self.target_categories.len() == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    PursueSignal,
    ReduceDominant,
    Surprise,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationOption {
    pub option_id: String,
    pub label: String,
    pub direction: Direction,
    pub kind: OptionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Idle,
    InsightShown,
    AwaitingResponse,
    Narrowing,
    Blending,
    Dismissed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initiation {
    AiInitiated,
    UserInitiated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    Insight,
    Options,
    Narrowing,
    Reply,
    Clarify,
    Confirmation,
}

/// One assistant message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistantTurn {
    pub turn: TurnKind,
    pub text: String,
    pub options: Vec<ExplorationOption>,
    pub direction: Option<Direction>,
    pub provider: ProviderTag,
}

impl AssistantTurn {
    pub fn to_event(&self) -> EventData {
        EventData::DialogueTurn {
            turn: self.turn,
            text: self.text.clone(),
            options: self.options.clone(),
            direction: self.direction.clone(),
            provider: self.provider,
        }
    }
}

/// Something the orchestrator wants logged.
#[derive(Debug, Clone, PartialEq)]
pub enum DialogueOutput {
    Turn(AssistantTurn),
    Fallback { request: RequestKind, reason: String },
}

impl DialogueOutput {
    pub fn to_event(&self) -> EventData {
        match self {
            DialogueOutput::Turn(t) => t.to_event(),
            DialogueOutput::Fallback { request, reason } => EventData::ProviderFallback {
                request: *request,
                reason: reason.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub session_id: String,
    pub stage: Stage,
    pub insight: Option<InsightReport>,
    pub presented_options: Vec<ExplorationOption>,
    pub narrowing_rounds_used: u8,
    pub chosen_direction: Option<Direction>,
    pub turn_count: u32,
    pub initiation: Initiation,
    /// Number of dialogue cycles started so far.
    pub cycle: u32,
}

struct Turns {
    outputs: Vec<DialogueOutput>,
}

impl Turns {
    fn new() -> Self {
        Self { outputs: Vec::new() }
    }

    fn ask(
        &mut self,
        provider: &dyn Provider,
        request: &ProviderRequest,
        categories: &[String],
    ) -> crate::provider::ProviderResponse {
        let asked = ask(provider, request, categories);
        if let Some(reason) = asked.fallback {
            self.outputs.push(DialogueOutput::Fallback {
                request: request.kind(),
                reason,
            });
        }
        asked.response
    }

    fn say(&mut self, turn: TurnKind, text: String, options: Vec<ExplorationOption>, direction: Option<Direction>, provider: ProviderTag) {
        self.outputs.push(DialogueOutput::Turn(AssistantTurn {
            turn,
            text,
            options,
            direction,
            provider,
        }));
    }
}

impl DialogueSession {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            stage: Stage::Idle,
            insight: None,
            presented_options: Vec::new(),
            narrowing_rounds_used: 0,
            chosen_direction: None,
            turn_count: 0,
            initiation: Initiation::AiInitiated,
            cycle: 0,
        }
    }

    /// True while a cycle is in progress.
    pub fn is_active(&self) -> bool {
        !matches!(self.stage, Stage::Idle | Stage::Dismissed)
    }

    fn expect_stage(&self, allowed: &[Stage], action: &str) -> Result<()> {
        if allowed.contains(&self.stage) {
            Ok(())
        } else {
            Err(Error::State(format!("cannot {action} in stage {:?}", self.stage)))
        }
    }

    fn begin_cycle(&mut self, initiation: Initiation) {
        self.cycle += 1;
        self.initiation = initiation;
        self.narrowing_rounds_used = 0;
        self.chosen_direction = None;
        self.presented_options.clear();
        self.turn_count = 0;
    }

    /// Opens an AI-initiated cycle with an observation about the feed.
    pub fn show_insight(
        &mut self,
        insight: InsightReport,
        provider: &dyn Provider,
        categories: &[String],
    ) -> Result<Vec<DialogueOutput>> {
        self.expect_stage(&[Stage::Idle, Stage::Dismissed], "show an insight")?;
        let mut turns = Turns::new();
        let resp = turns.ask(provider, &ProviderRequest::InsightText { report: insight.clone() }, categories);
        turns.say(TurnKind::Insight, resp.text, Vec::new(), None, resp.provider_tag);
        self.begin_cycle(Initiation::AiInitiated);
        self.insight = Some(insight);
        self.stage = Stage::InsightShown;
        self.turn_count = 1;
        Ok(turns.outputs)
    }

    pub fn present_options(&mut self, provider: &dyn Provider, categories: &[String]) -> Result<Vec<DialogueOutput>> {
        self.expect_stage(&[Stage::InsightShown], "present options")?;
        let report = self.insight.clone().expect("insight is set in InsightShown");
        let mut turns = Turns::new();
        let resp = turns.ask(provider, &ProviderRequest::OptionSet { report }, categories);
        let options = resp.options.unwrap_or_default();
        turns.say(TurnKind::Options, resp.text, options.clone(), None, resp.provider_tag);
        self.presented_options = options;
        self.stage = Stage::AwaitingResponse;
        Ok(turns.outputs)
    }

    /// `show_insight` followed by `present_options`.
    pub fn open_dialogue_ai(
        &mut self,
        insight: InsightReport,
        provider: &dyn Provider,
        categories: &[String],
    ) -> Result<Vec<DialogueOutput>> {
        let mut out = self.show_insight(insight, provider, categories)?;
        out.extend(self.present_options(provider, categories)?);
        Ok(out)
    }

    /// Starts a user-initiated cycle from a typed message. No options are
    /// generated; a parseable message goes straight to blending, anything
    /// else gets one open clarifying question.
    pub fn open_dialogue_user(
        &mut self,
        text: &str,
        provider: &dyn Provider,
        categories: &[String],
    ) -> Result<Vec<DialogueOutput>> {
        self.expect_stage(&[Stage::Idle, Stage::Dismissed], "open the chat")?;
        if text.trim().is_empty() {
            return Err(Error::Validation("message is empty".into()));
        }
        self.begin_cycle(Initiation::UserInitiated);
        self.insight = None;
        self.stage = Stage::AwaitingResponse;
        self.map_text(text, provider, categories)
    }

    fn map_text(&mut self, text: &str, provider: &dyn Provider, categories: &[String]) -> Result<Vec<DialogueOutput>> {
        let mut turns = Turns::new();
        let resp = turns.ask(
            provider,
            &ProviderRequest::MapFreeText {
                text: text.to_string(),
                categories: categories.to_vec(),
            },
            categories,
        );
        self.turn_count += 1;
        match resp.direction {
            Some(direction) => {
                turns.say(TurnKind::Reply, resp.text, Vec::new(), Some(direction.clone()), resp.provider_tag);
                self.chosen_direction = Some(direction);
                self.presented_options.clear();
                self.stage = Stage::Blending;
            }
            None => turns.say(TurnKind::Clarify, resp.text, Vec::new(), None, resp.provider_tag),
        }
        Ok(turns.outputs)
    }

    /// Picks one of the presented options. The first pick of a refinable
    /// direction asks one narrowing question; everything else moves to
    /// blending.
    pub fn select_option(
        &mut self,
        option_id: &str,
        provider: &dyn Provider,
        categories: &[String],
    ) -> Result<Vec<DialogueOutput>> {
        self.expect_stage(&[Stage::AwaitingResponse, Stage::Narrowing], "select an option")?;
        let option = self
            .presented_options
            .iter()
            .find(|o| o.option_id == option_id)
            .cloned()
            .ok_or_else(|| Error::Validation(format!("option `{option_id}` is not on offer")))?;
        self.turn_count += 1;
        let mut turns = Turns::new();
        if self.stage == Stage::AwaitingResponse
            && self.narrowing_rounds_used == 0
            && option.direction.admits_refinement()
        {
            let resp = turns.ask(provider, &ProviderRequest::NarrowingSet { option: option.clone() }, categories);
            let refinements = resp.options.unwrap_or_default();
            if refinements.len() >= 2 {
                turns.say(TurnKind::Narrowing, resp.text, refinements.clone(), None, resp.provider_tag);
                self.presented_options = refinements;
                self.narrowing_rounds_used = 1;
                self.stage = Stage::Narrowing;
                return Ok(turns.outputs);
            }
        }
        self.chosen_direction = Some(option.direction);
        self.presented_options.clear();
        self.stage = Stage::Blending;
        Ok(turns.outputs)
    }

    /// Typed reply at any point of an open cycle. During blending it acts as
    /// an adjustment and never re-enters narrowing.
    pub fn submit_free_text(
        &mut self,
        text: &str,
        provider: &dyn Provider,
        categories: &[String],
    ) -> Result<Vec<DialogueOutput>> {
        self.expect_stage(
            &[Stage::AwaitingResponse, Stage::Narrowing, Stage::Blending],
            "send a message",
        )?;
        if text.trim().is_empty() {
            return Err(Error::Validation("message is empty".into()));
        }
        let stage = self.stage;
        let out = self.map_text(text, provider, categories)?;
        if self.stage != Stage::Blending {
            self.stage = stage;
        }
        Ok(out)
    }

    /// Applies the chosen direction to the feed and closes the cycle.
    pub fn confirm_blend(
        &mut self,
        feed: &mut FeedState,
        corpus: &Corpus,
        provider: &dyn Provider,
    ) -> Result<(Vec<DialogueOutput>, EventData)> {
        self.expect_stage(&[Stage::Blending], "confirm blending")?;
        let direction = self
            .chosen_direction
            .clone()
            .ok_or_else(|| Error::State("no direction chosen".into()))?;
        let change = feed.set_direction(direction.clone(), corpus)?;
        let categories = corpus.category_ids();
        let mut turns = Turns::new();
        let resp = turns.ask(
            provider,
            &ProviderRequest::ConfirmationText {
                direction: direction.clone(),
            },
            &categories,
        );
        turns.say(TurnKind::Confirmation, resp.text, Vec::new(), Some(direction), resp.provider_tag);
        self.presented_options.clear();
        self.stage = Stage::Idle;
        Ok((turns.outputs, change))
    }

    /// Closes the panel. Returns false when it was already dismissed.
    pub fn dismiss(&mut self) -> Result<bool> {
        match self.stage {
            Stage::Idle => Err(Error::State("nothing to dismiss".into())),
            Stage::Dismissed => Ok(false),
            _ => {
                self.stage = Stage::Dismissed;
                self.presented_options.clear();
                self.chosen_direction = None;
                Ok(true)
            }
        }
    }
}
