//! Feed exploration engine.
//!
//! Builds biased recommendation feeds from a categorized corpus, watches how
//! a participant browses them, lets an assistant open a short option-based
//! dialogue about what the feed is missing, and blends the chosen direction
//! into later refreshes. Every interaction is logged, and the exploration
//! measures are computed from the log alone. A simulation harness runs
//! whole studies with scripted participants.
//!
//! The usual entry point is [`session::Session`]; see the `examples/`
//! directory for one walkthrough per capability.

pub mod analysis;
pub mod condition;
pub mod config;
pub mod corpus;
pub mod dialogue;
pub mod error;
pub mod event_log;
pub mod feed;
pub mod harness;
pub mod metrics;
pub mod provider;
pub mod session;
pub mod taxonomy;

pub use condition::Condition;
pub use config::EngineConfig;
pub use corpus::{Corpus, ContentItem, FeedSpec, StandardFeed};
pub use error::{Error, Result};
pub use session::{Session, SessionSetup};
