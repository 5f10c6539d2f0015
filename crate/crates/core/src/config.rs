//! Engine configuration.
//!
//! The config file is flat TOML (`key = value` lines, `#` comments). Every key
//! is optional; missing keys take the defaults below.
//!
//! ```toml
//! trigger_items = 20
//! blend_rate = 0.25
//! underrep_threshold = 0.05
//! proactivity = "moderate"   # reactive | moderate | eager
//! provider = "template"      # template | remote
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalyzerConfig, ProactivityLevel};
use crate::error::{Error, Result};
use crate::provider::ProviderMode;

/// How SEARCH results reach the feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Results appear as a separate block above the feed.
    #[default]
    Supplement,
    /// Results substitute unsurfaced feed slots.
    Replace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Distinct surfaced items before a moderate trigger fires.
    pub trigger_items: usize,
    /// Optional minimum elapsed phase time before a moderate trigger; 0 disables it.
    pub trigger_min_elapsed_ms: u64,
    /// Continuous scrolling distance that fires an eager trigger.
    pub eager_scroll_px: u64,
    pub proactivity: ProactivityLevel,
    /// Fraction of the feed substituted per refresh cycle.
    pub blend_rate: f64,
    /// Share of an increase-direction refresh drawn from the target categories.
    pub increase_purity: f64,
    pub underrep_threshold: f64,
    pub dominant_top_n: usize,
    pub signal_multiplier: f64,
    pub signal_min_evidence: usize,
    pub signal_min_impressions: usize,
    /// Auto-refresh interval; 0 means pull-to-refresh only.
    pub auto_refresh_ms: u64,
    pub search_results: usize,
    pub search_mode: SearchMode,
    pub provider: ProviderMode,
    /// Minimum dwell for an impression to count as browsed in breadth and
    /// bubble-breaking.
    pub browse_min_dwell_ms: u64,
    pub discovery_min_dwell_ms: u64,
    pub engagement_window_ms: u64,
    pub velocity_window_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            trigger_items: 20,
            trigger_min_elapsed_ms: 0,
            eager_scroll_px: 4000,
            proactivity: ProactivityLevel::Moderate,
            blend_rate: 0.25,
            increase_purity: 0.8,
            underrep_threshold: 0.05,
            dominant_top_n: 2,
            signal_multiplier: 2.0,
            signal_min_evidence: 2,
            signal_min_impressions: 5,
            auto_refresh_ms: 0,
            search_results: 10,
            search_mode: SearchMode::Supplement,
            provider: ProviderMode::Template,
            browse_min_dwell_ms: 0,
            discovery_min_dwell_ms: 2000,
            engagement_window_ms: 300_000,
            velocity_window_ms: 120_000,
        }
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EngineConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        frac("blend_rate", self.blend_rate)?;
        frac("underrep_threshold", self.underrep_threshold)?;
        if !(self.increase_purity > 0.0 && self.increase_purity <= 1.0) {
            return Err(Error::Validation("increase_purity must lie in (0, 1]".into()));
        }
        if self.trigger_items == 0 || self.dominant_top_n == 0 {
            return Err(Error::Validation(
                "trigger_items and dominant_top_n must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn analyzer(&self) -> AnalyzerConfig {
        AnalyzerConfig {
            top_n: self.dominant_top_n,
            underrep_threshold: self.underrep_threshold,
            signal_multiplier: self.signal_multiplier,
            min_evidence: self.signal_min_evidence,
            min_impressions: self.signal_min_impressions,
            trigger_items: self.trigger_items,
            trigger_min_elapsed_ms: self.trigger_min_elapsed_ms,
            eager_scroll_px: self.eager_scroll_px,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(EngineConfig::from_toml_str("").unwrap(), EngineConfig::default());
    }

    #[test]
    fn parses_documented_keys() {
        let cfg = EngineConfig::from_toml_str(
            "# study overrides\ntrigger_items = 15\nblend_rate = 0.3\nproactivity = \"eager\"\nprovider = \"remote\"\n",
        )
        .unwrap();
        assert_eq!(cfg.trigger_items, 15);
        assert_eq!(cfg.blend_rate, 0.3);
        assert_eq!(cfg.proactivity, ProactivityLevel::Eager);
        assert_eq!(cfg.provider, ProviderMode::Remote);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_rates() {
        assert!(EngineConfig::from_toml_str("trigger_itmes = 3").is_err());
        assert!(EngineConfig::from_toml_str("blend_rate = 0.0").is_err());
    }
}
