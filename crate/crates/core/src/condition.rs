use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four interface variants compared in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Feed with pull-to-refresh and no exploration tools.
    #[serde(rename = "FEED")]
    Feed,
    /// Feed plus keyword/category search.
    #[serde(rename = "SEARCH")]
    Search,
    /// Feed plus a chat panel that waits for the user to speak first.
    #[serde(rename = "USER_CHAT")]
    UserChat,
    /// Feed plus the assistant that opens the dialogue itself.
    #[serde(rename = "AI_INIT")]
    AiInit,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Feed,
        Condition::Search,
        Condition::UserChat,
        Condition::AiInit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Feed => "FEED",
            Condition::Search => "SEARCH",
            Condition::UserChat => "USER_CHAT",
            Condition::AiInit => "AI_INIT",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "FEED" => Ok(Condition::Feed),
            "SEARCH" => Ok(Condition::Search),
            "USER_CHAT" => Ok(Condition::UserChat),
            "AI_INIT" => Ok(Condition::AiInit),
            _ => Err(Error::Validation(format!("unknown condition `{token}`"))),
        }
    }

    pub fn has_search(self) -> bool {
        self == Condition::Search
    }

    pub fn has_chat(self) -> bool {
        matches!(self, Condition::UserChat | Condition::AiInit)
    }

    /// Whether the assistant may open the dialogue on its own.
    pub fn ai_initiates(self) -> bool {
        self == Condition::AiInit
    }

    pub fn has_tool(self) -> bool {
        self != Condition::Feed
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
