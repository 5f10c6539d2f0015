//! Append-only behavioral event stream and its JSONL persistence.
//!
//! A log file starts with one header record, followed by one event per line:
//!
//! ```text
//! {"format":"feedscout-log/1","session_id":"p01-AI_INIT",...}
//! {"seq":1,"session_id":"p01-AI_INIT","t_ms":0,"kind":"phase_mark","payload":{"phase":"warmup","boundary":"start"}}
//! ```
//!
//! Field order is fixed by the struct declarations below, so writing the same
//! stream twice produces identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ProactivityLevel, TriggerOrigin};
use crate::condition::Condition;
use crate::config::EngineConfig;
use crate::corpus::{Corpus, FeedSpec, StandardFeed};
use crate::dialogue::{Direction, ExplorationOption, Stage, TurnKind};
use crate::error::{Error, Result};
use crate::feed::{ChangeCause, Origin};
use crate::provider::{ProviderTag, RequestKind};

pub const LOG_FORMAT: &str = "feedscout-log/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Warmup,
    Exploration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickTarget {
    Item,
    /// The floating exploration button; an explicit request for an insight.
    AssistantButton,
    ChatPanel,
    SearchBar,
}

/// Where the session's corpus came from, so a log can be replayed alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic { size: usize, seed: u64 },
    File { path: String },
}

impl CorpusSource {
    pub fn load(&self) -> Result<Corpus> {
        match self {
            CorpusSource::Synthetic { size, seed } => Ok(Corpus::synthetic_sized(*size, *seed)),
            CorpusSource::File { path } => Corpus::load_path(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Seed of the biased initial feed.
    pub feed: u64,
    /// Base seed for refresh draws; refresh `i` uses `session + i`.
    pub session: u64,
}

/// First line of every log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub session_id: String,
    pub condition: Condition,
    pub participant_id: Option<String>,
    pub feed_label: Option<StandardFeed>,
    pub feed_spec: FeedSpec,
    pub seeds: Seeds,
    /// Unix milliseconds at session start; absent for simulated sessions.
    pub wall_clock_start_ms: Option<u64>,
    pub corpus: CorpusSource,
    pub categories: Vec<String>,
    pub initial_items: Vec<String>,
    /// Category counts of the initial feed.
    pub initial_counts: BTreeMap<String, usize>,
    pub config: EngineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventData {
    ImpressionEnter {
        item_id: String,
        category: String,
        origin: Origin,
        position: usize,
    },
    ImpressionExit {
        item_id: String,
        category: String,
        origin: Origin,
        dwell_ms: u64,
    },
    Scroll {
        position_px: i64,
    },
    Click {
        target: ClickTarget,
        item_id: Option<String>,
    },
    Refresh {
        seed: u64,
        new_pass: bool,
        auto: bool,
    },
    CompositionChange {
        cause: ChangeCause,
        counts: BTreeMap<String, usize>,
        replaced: usize,
        direction: Option<Direction>,
        fallback: Vec<String>,
    },
    DialogueTurn {
        turn: TurnKind,
        text: String,
        options: Vec<ExplorationOption>,
        direction: Option<Direction>,
        provider: ProviderTag,
    },
    OptionSelect {
        option_id: String,
        label: String,
        chars: usize,
    },
    FreeText {
        text: String,
        chars: usize,
    },
    Trigger {
        origin: TriggerOrigin,
        policy: ProactivityLevel,
        reason: String,
    },
    Dismiss {
        stage: Stage,
    },
    ProviderFallback {
        request: RequestKind,
        reason: String,
    },
    SearchQuery {
        query: String,
        chars: usize,
        result_count: usize,
    },
    SurveyResponse {
        answers: BTreeMap<String, i64>,
    },
    PhaseMark {
        phase: Phase,
        boundary: Boundary,
    },
}

impl EventData {
    pub fn kind(&self) -> &'static str {
        match self {
            EventData::ImpressionEnter { .. } => "impression_enter",
            EventData::ImpressionExit { .. } => "impression_exit",
            EventData::Scroll { .. } => "scroll",
            EventData::Click { .. } => "click",
            EventData::Refresh { .. } => "refresh",
            EventData::CompositionChange { .. } => "composition_change",
            EventData::DialogueTurn { .. } => "dialogue_turn",
            EventData::OptionSelect { .. } => "option_select",
            EventData::FreeText { .. } => "free_text",
            EventData::Trigger { .. } => "trigger",
            EventData::Dismiss { .. } => "dismiss",
            EventData::ProviderFallback { .. } => "provider_fallback",
            EventData::SearchQuery { .. } => "search_query",
            EventData::SurveyResponse { .. } => "survey_response",
            EventData::PhaseMark { .. } => "phase_mark",
        }
    }

    /// Events the engine produces itself rather than receiving from a client.
    /// Replay skips these and regenerates them.
    pub fn is_derived(&self) -> bool {
        match self {
            EventData::CompositionChange { .. }
            | EventData::DialogueTurn { .. }
            | EventData::Trigger { .. }
            | EventData::ProviderFallback { .. } => true,
            EventData::Refresh { auto, .. } => *auto,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub seq: u64,
    pub session_id: String,
    pub t_ms: u64,
    #[serde(flatten)]
    pub data: EventData,
}

/// The ordered events of one session, with the invariants enforced on append.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventStream {
    session_id: String,
    events: Vec<BehaviorEvent>,
    open_impressions: BTreeSet<String>,
    open_phase: Option<Phase>,
}

impl EventStream {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            ..Self::default()
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn events(&self) -> &[BehaviorEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_t(&self) -> u64 {
        self.events.last().map_or(0, |e| e.t_ms)
    }

    pub fn current_phase(&self) -> Option<Phase> {
        self.open_phase
    }

    /// Checks `data` at time `t_ms` against the tail without appending.
    pub fn check(&self, t_ms: u64, data: &EventData) -> Result<()> {
        let last = self.last_t();
        if t_ms < last {
            return Err(Error::Monotonicity { t_ms, last_ms: last });
        }
        match data {
            EventData::ImpressionEnter { item_id, .. } if self.open_impressions.contains(item_id) => {
                Err(Error::State(format!("impression of `{item_id}` is already open")))
            }
            EventData::ImpressionExit { item_id, .. } if !self.open_impressions.contains(item_id) => {
                Err(Error::State(format!("no open impression for `{item_id}`")))
            }
            EventData::PhaseMark { phase, boundary } => match (boundary, self.open_phase) {
                (Boundary::Start, None) => Ok(()),
                (Boundary::Start, Some(open)) => Err(Error::State(format!(
                    "cannot start {phase:?} while {open:?} is open"
                ))),
                (Boundary::End, Some(open)) if open == *phase => Ok(()),
                (Boundary::End, _) => Err(Error::State(format!("{phase:?} is not open"))),
            },
            _ => Ok(()),
        }
    }

    /// Appends an event, assigning the next sequence number.
    pub fn append(&mut self, t_ms: u64, data: EventData) -> Result<&BehaviorEvent> {
        self.check(t_ms, &data)?;
        let event = BehaviorEvent {
            seq: self.events.len() as u64 + 1,
            session_id: self.session_id.clone(),
            t_ms,
            data,
        };
        self.track(&event.data);
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    /// Appends an already-numbered event, as read from a file.
    pub fn push(&mut self, event: BehaviorEvent) -> Result<()> {
        let expected = self.events.len() as u64 + 1;
        if event.seq != expected {
            return Err(Error::Validation(format!(
                "expected seq {expected}, found {}",
                event.seq
            )));
        }
        if self.events.is_empty() && self.session_id.is_empty() {
            self.session_id = event.session_id.clone();
        }
        if event.session_id != self.session_id {
            return Err(Error::Validation(format!(
                "event {} belongs to session `{}`, not `{}`",
                event.seq, event.session_id, self.session_id
            )));
        }
        self.check(event.t_ms, &event.data)?;
        self.track(&event.data);
        self.events.push(event);
        Ok(())
    }

    fn track(&mut self, data: &EventData) {
        match data {
            EventData::ImpressionEnter { item_id, .. } => {
                self.open_impressions.insert(item_id.clone());
            }
            EventData::ImpressionExit { item_id, .. } => {
                self.open_impressions.remove(item_id);
            }
            EventData::PhaseMark { phase, boundary } => {
                self.open_phase = match boundary {
                    Boundary::Start => Some(*phase),
                    Boundary::End => None,
                };
            }
            _ => {}
        }
    }

    /// Events inside the given phase, between its start and end marks
    /// (exclusive). An unclosed phase extends to the end of the stream.
    pub fn phase_window(&self, phase: Phase) -> Result<&[BehaviorEvent]> {
        phase_window(&self.events, phase)
    }
}

/// Slice of `events` strictly inside the marks of `phase`.
pub fn phase_window(events: &[BehaviorEvent], phase: Phase) -> Result<&[BehaviorEvent]> {
    let start = events
        .iter()
        .position(|e| matches!(e.data, EventData::PhaseMark { phase: p, boundary: Boundary::Start } if p == phase))
        .ok_or_else(|| Error::MissingPhase(format!("{phase:?} has no start mark")))?;
    let end = events[start + 1..]
        .iter()
        .position(|e| matches!(e.data, EventData::PhaseMark { phase: p, boundary: Boundary::End } if p == phase))
        .map_or(events.len(), |i| start + 1 + i);
    Ok(&events[start + 1..end])
}

/// Time of a phase's start mark.
pub fn phase_start_t(events: &[BehaviorEvent], phase: Phase) -> Result<u64> {
    events
        .iter()
        .find(|e| matches!(e.data, EventData::PhaseMark { phase: p, boundary: Boundary::Start } if p == phase))
        .map(|e| e.t_ms)
        .ok_or_else(|| Error::MissingPhase(format!("{phase:?} has no start mark")))
}

/// Durable writer: every append is flushed before it returns.
pub struct LogWriter {
    out: BufWriter<File>,
}

impl LogWriter {
    pub fn create(path: impl AsRef<Path>, header: &LogHeader) -> Result<Self> {
        let mut writer = Self {
            out: BufWriter::new(File::create(path)?),
        };
        writer.write_line(header)?;
        Ok(writer)
    }

    pub fn append(&mut self, event: &BehaviorEvent) -> Result<()> {
        self.write_line(event)
    }

    fn write_line<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    /// Flushes and syncs the file to disk.
    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        self.out.get_ref().sync_all()?;
        Ok(())
    }
}

/// Serializes a header and stream to the log format.
pub fn write_log(out: &mut impl Write, header: Option<&LogHeader>, stream: &EventStream) -> Result<()> {
    if let Some(h) = header {
        serde_json::to_writer(&mut *out, h).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    for event in stream.events() {
        serde_json::to_writer(&mut *out, event).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A log file read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedLog {
    pub header: Option<LogHeader>,
    pub stream: EventStream,
    pub warnings: Vec<String>,
}

impl LoadedLog {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_log(&mut buf, self.header.as_ref(), &self.stream).expect("writing to memory");
        buf
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<LoadedLog> {
    parse_log(&std::fs::read_to_string(path)?)
}

/// Parses log text. An empty document is an empty stream. A final line
/// without a trailing newline that fails to parse is treated as a torn write
/// and dropped with a warning; any other bad line is an error naming it.
pub fn parse_log(text: &str) -> Result<LoadedLog> {
    let mut header = None;
    let mut stream = EventStream::new("");
    let mut warnings = Vec::new();
    let torn_tail = !text.is_empty() && !text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let last = lines.len();

    for (idx, line) in lines.iter().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<serde_json::Value, _> = serde_json::from_str(line);
        let value = match parsed {
            Ok(v) => v,
            Err(e) if torn_tail && lineno == last => {
                warnings.push(format!("line {lineno}: dropped truncated record ({e})"));
                break;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: e.to_string(),
                })
            }
        };
        let parse_err = |e: serde_json::Error| Error::Parse {
            line: lineno,
            message: e.to_string(),
        };
        if value.get("format").is_some() {
            if header.is_some() || !stream.is_empty() {
                return Err(Error::Parse {
                    line: lineno,
                    message: "header record must be the first line".into(),
                });
            }
            let h: LogHeader = serde_json::from_value(value).map_err(parse_err)?;
            stream = EventStream::new(h.session_id.clone());
            header = Some(h);
            continue;
        }
        let event: BehaviorEvent = serde_json::from_value(value).map_err(parse_err)?;
        stream.push(event).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
    }
    Ok(LoadedLog {
        header,
        stream,
        warnings,
    })
}
