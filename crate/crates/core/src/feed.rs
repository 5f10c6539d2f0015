//! The live feed: impressions, scroll tracking and gradual blending.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::CategoryDistribution;
use crate::corpus::{ContentItem, Corpus, UNDERREPRESENTED_SHARE};
use crate::dialogue::{Direction, DirectionMode};
use crate::error::{Error, Result};
use crate::event_log::EventData;
use crate::taxonomy;

/// How an item got into the feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Part of the feed's own recommendation: the initial feed, or a
    /// refresh made while no exploration direction was set.
    Initial,
    /// Substituted in while blending toward a chosen direction.
    Blended,
    /// Surfaced by a search query.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeCause {
    Direction,
    Refresh,
    Search,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedItem {
    pub item: ContentItem,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpressionRecord {
    pub item_id: String,
    pub category: String,
    pub origin: Origin,
    pub enter_time: u64,
    pub exit_time: Option<u64>,
}

impl ImpressionRecord {
    pub fn dwell_ms(&self) -> Option<u64> {
        self.exit_time.map(|exit| exit - self.enter_time)
    }
}

/// A replacement drawn from a different category because the wanted one
/// had nothing left to offer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackPick {
    pub wanted: String,
    pub used: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedState {
    session_id: String,
    items: Vec<FeedItem>,
    cursor: usize,
    direction: Option<Direction>,
    blend_rate: f64,
    increase_purity: f64,
    underrep_threshold: f64,
    refresh_count: u64,
    search_block: Vec<FeedItem>,
    impressions: Vec<ImpressionRecord>,
    open: BTreeMap<String, usize>,
    served: BTreeSet<String>,
    last_t: u64,
}

impl FeedState {
    pub fn initialize(session_id: impl Into<String>, items: Vec<ContentItem>, blend_rate: f64) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Validation("a feed needs at least one item".into()));
        }
        if !(blend_rate > 0.0 && blend_rate < 1.0) {
            return Err(Error::Validation(format!("blend_rate must lie in (0, 1), got {blend_rate}")));
        }
        let ids: BTreeSet<_> = items.iter().map(|i| i.item_id.as_str()).collect();
        if ids.len() != items.len() {
            return Err(Error::Validation("feed items must be distinct".into()));
        }
        Ok(Self {
            session_id: session_id.into(),
            items: items
                .into_iter()
                .map(|item| FeedItem {
                    item,
                    origin: Origin::Initial,
                })
                .collect(),
            cursor: 0,
            direction: None,
            blend_rate,
            increase_purity: 0.8,
            underrep_threshold: UNDERREPRESENTED_SHARE,
            refresh_count: 0,
            search_block: Vec::new(),
            impressions: Vec::new(),
            open: BTreeMap::new(),
            served: BTreeSet::new(),
            last_t: 0,
        })
    }

    pub fn with_increase_purity(mut self, purity: f64) -> Self {
        self.increase_purity = purity;
        self
    }

    pub fn with_underrep_threshold(mut self, threshold: f64) -> Self {
        self.underrep_threshold = threshold;
        self
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn items(&self) -> &[FeedItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// One past the deepest surfaced index.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn direction(&self) -> Option<&Direction> {
        self.direction.as_ref()
    }

    pub fn blend_rate(&self) -> f64 {
        self.blend_rate
    }

    pub fn refresh_count(&self) -> u64 {
        self.refresh_count
    }

    pub fn search_block(&self) -> &[FeedItem] {
        &self.search_block
    }

    pub fn impressions(&self) -> &[ImpressionRecord] {
        &self.impressions
    }

    pub fn has_open_impression(&self, item_id: &str) -> bool {
        self.open.contains_key(item_id)
    }

    /// Items that have been surfaced at least once this session.
    pub fn served(&self) -> &BTreeSet<String> {
        &self.served
    }

    /// Number of items substituted per refresh: `round(rate * n)` clamped to `[1, n]`.
    pub fn replacement_count(&self) -> usize {
        let n = self.items.len();
        ((self.blend_rate * n as f64).round() as usize).clamp(1, n)
    }

    /// Unsurfaced slots still available for substitution.
    pub fn replaceable_slots(&self) -> usize {
        (self.cursor..self.items.len())
            .filter(|&i| !self.open.contains_key(&self.items[i].item.item_id))
            .count()
    }

    pub fn category_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for fi in &self.items {
            *counts.entry(fi.item.category.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn current_composition(&self) -> CategoryDistribution {
        CategoryDistribution::from_counts(&self.category_counts())
            .expect("a feed is never empty")
    }

    fn check_time(&mut self, t: u64) -> Result<()> {
        if t < self.last_t {
            return Err(Error::Monotonicity {
                t_ms: t,
                last_ms: self.last_t,
            });
        }
        self.last_t = t;
        Ok(())
    }

    fn locate(&self, item_id: &str) -> Option<(usize, &FeedItem)> {
        self.items
            .iter()
            .enumerate()
            .find(|(_, fi)| fi.item.item_id == item_id)
            .or_else(|| {
                self.search_block
                    .iter()
                    .enumerate()
                    .find(|(_, fi)| fi.item.item_id == item_id)
            })
    }

    /// Opens an impression and advances the cursor when the item sits deeper
    /// than anything surfaced so far.
    pub fn record_impression(&mut self, item_id: &str, enter_time: u64) -> Result<EventData> {
        let (position, fi) = self
            .locate(item_id)
            .ok_or_else(|| Error::Validation(format!("item `{item_id}` is not in the feed")))?;
        let (category, origin) = (fi.item.category.clone(), fi.origin);
        if self.open.contains_key(item_id) {
            return Err(Error::State(format!("impression of `{item_id}` is already open")));
        }
        self.check_time(enter_time)?;
        if origin != Origin::Search {
            self.cursor = self.cursor.max(position + 1);
        }
        self.served.insert(item_id.to_string());
        self.open.insert(item_id.to_string(), self.impressions.len());
        self.impressions.push(ImpressionRecord {
            item_id: item_id.to_string(),
            category: category.clone(),
            origin,
            enter_time,
            exit_time: None,
        });
        Ok(EventData::ImpressionEnter {
            item_id: item_id.to_string(),
            category,
            origin,
            position,
        })
    }

    pub fn close_impression(&mut self, item_id: &str, exit_time: u64) -> Result<EventData> {
        let idx = *self
            .open
            .get(item_id)
            .ok_or_else(|| Error::State(format!("no open impression for `{item_id}`")))?;
        self.check_time(exit_time)?;
        self.open.remove(item_id);
        let rec = &mut self.impressions[idx];
        rec.exit_time = Some(exit_time);
        Ok(EventData::ImpressionExit {
            item_id: rec.item_id.clone(),
            category: rec.category.clone(),
            origin: rec.origin,
            dwell_ms: exit_time - rec.enter_time,
        })
    }

    pub fn record_scroll(&mut self, position_px: i64, time_ms: u64) -> Result<EventData> {
        self.check_time(time_ms)?;
        Ok(EventData::Scroll { position_px })
    }

    /// Sets the blending target for subsequent refreshes. Content is not
    /// touched until the next refresh.
    pub fn set_direction(&mut self, direction: Direction, corpus: &Corpus) -> Result<EventData> {
        direction.validate(&corpus.category_ids())?;
        self.direction = Some(direction.clone());
        Ok(EventData::CompositionChange {
            cause: ChangeCause::Direction,
            counts: self.category_counts(),
            replaced: 0,
            direction: Some(direction),
            fallback: Vec::new(),
        })
    }

    pub fn clear_direction(&mut self) {
        self.direction = None;
    }

    /// Moves the cursor back to the top so the whole feed becomes
    /// substitutable again, as when the user pulls to refresh after reaching
    /// the end.
    pub fn start_new_pass(&mut self) {
        self.cursor = 0;
    }

    /// Substitutes `replacement_count()` unsurfaced items according to the
    /// current direction and drops the search block, apart from results
    /// still on screen. Deterministic for a fixed state and seed.
    pub fn refresh_feed(&mut self, corpus: &Corpus, seed: u64) -> Result<EventData> {
        let k = self.replacement_count();
        let eligible: Vec<usize> = (self.cursor..self.items.len())
            .filter(|&i| !self.open.contains_key(&self.items[i].item.item_id))
            .collect();
        if eligible.len() < k {
            return Err(Error::State(format!(
                "refresh needs {k} unsurfaced slots, only {} remain",
                eligible.len()
            )));
        }
        let open = &self.open;
        self.search_block.retain(|fi| open.contains_key(&fi.item.item_id));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = self.category_counts();
        let slots = self.pick_slots(&eligible, k, &counts, corpus.categories().len(), &mut rng);
        let wanted = self.plan_categories(&slots, corpus, &counts, &mut rng);

        let mut taken: BTreeSet<String> = self
            .items
            .iter()
            .chain(&self.search_block)
            .map(|fi| fi.item.item_id.clone())
            .collect();
        let excluded = match &self.direction {
            Some(d) if d.mode == DirectionMode::Decrease => d.target_categories.clone(),
            _ => Vec::new(),
        };
        let refinement = self.direction.as_ref().and_then(|d| {
            d.refinement
                .as_ref()
                .map(|r| (d.target_categories.clone(), r.clone(), d.mode))
        });
        let mut fallback = Vec::new();
        let mut picks = Vec::with_capacity(k);
        let mut live_counts = counts.clone();
        for category in &wanted {
            let prefer = |item: &ContentItem| match &refinement {
                Some((targets, token, DirectionMode::Increase)) if targets.contains(&item.category) => {
                    taxonomy::title_matches_subtopic(&item.title, &item.category, token)
                }
                _ => true,
            };
            let item = match self.draw(corpus, category, &taken, &prefer, &mut rng) {
                Some(item) => item,
                None => {
                    let used = self
                        .nearest_category(corpus, category, &excluded, &taken, &live_counts)
                        .ok_or(Error::Capacity {
                            category: category.clone(),
                            needed: 1,
                            available: 0,
                        })?;
                    fallback.push(FallbackPick {
                        wanted: category.clone(),
                        used: used.clone(),
                    });
                    self.draw(corpus, &used, &taken, &|_| true, &mut rng)
                        .expect("nearest category has a free item")
                }
            };
            taken.insert(item.item_id.clone());
            *live_counts.entry(item.category.clone()).or_insert(0) += 1;
            picks.push(item);
        }

        let origin = if self.direction.is_some() {
            Origin::Blended
        } else {
            Origin::Initial
        };
        for (slot, item) in slots.iter().zip(picks) {
            self.items[*slot] = FeedItem { item, origin };
        }
        self.refresh_count += 1;
        Ok(EventData::CompositionChange {
            cause: ChangeCause::Refresh,
            counts: self.category_counts(),
            replaced: k,
            direction: self.direction.clone(),
            fallback: fallback.iter().map(|f| format!("{}->{}", f.wanted, f.used)).collect(),
        })
    }

    /// Slots to substitute, in ascending index order.
    fn pick_slots(
        &self,
        eligible: &[usize],
        k: usize,
        counts: &BTreeMap<String, usize>,
        category_total: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<usize> {
        let mut slots: Vec<usize> = match &self.direction {
            None => eligible.choose_multiple(rng, k).copied().collect(),
            Some(dir) => {
                let n = self.items.len() as f64;
                let fair = 1.0 / category_total.max(1) as f64;
                let keep = |cat: &str| match dir.mode {
                    DirectionMode::Increase => dir.target_categories.iter().any(|t| t == cat),
                    DirectionMode::Surprise => {
                        (counts.get(cat).copied().unwrap_or(0) as f64 / n) < self.underrep_threshold
                    }
                    DirectionMode::Decrease => false,
                };
                let mut ranked: Vec<(u8, Reverse<usize>)> = eligible
                    .iter()
                    .map(|&i| {
                        let item = &self.items[i].item;
                        let cat = item.category.as_str();
                        let rank = if dir.mode == DirectionMode::Decrease
                            && dir.target_categories.iter().any(|t| t == cat)
                        {
                            let on_topic = dir.refinement.as_ref().is_some_and(|r| {
                                taxonomy::title_matches_subtopic(&item.title, cat, r)
                            });
                            if on_topic {
                                0
                            } else {
                                1
                            }
                        } else if keep(cat) {
                            4
                        } else if counts[cat] as f64 / n > fair {
                            2
                        } else {
                            3
                        };
                        (rank, Reverse(i))
                    })
                    .collect();
                ranked.sort();
                ranked.into_iter().take(k).map(|(_, Reverse(i))| i).collect()
            }
        };
        slots.sort_unstable();
        slots
    }

    /// The category each replacement should come from, one per slot.
    fn plan_categories(
        &self,
        slots: &[usize],
        corpus: &Corpus,
        counts: &BTreeMap<String, usize>,
        rng: &mut ChaCha8Rng,
    ) -> Vec<String> {
        let k = slots.len();
        let slot_cats: Vec<String> = slots.iter().map(|&i| self.items[i].item.category.clone()).collect();
        let Some(dir) = &self.direction else {
            return slot_cats;
        };
        let round_robin = |pool: &[String], count: usize| -> Vec<String> {
            (0..count).map(|i| pool[i % pool.len()].clone()).collect()
        };
        let mut plan = match dir.mode {
            DirectionMode::Increase => {
                let n_target = ((self.increase_purity * k as f64).ceil() as usize).min(k);
                let mut plan = round_robin(&dir.target_categories, n_target);
                plan.extend(slot_cats[n_target..].iter().cloned());
                plan
            }
            DirectionMode::Decrease => {
                let mut others: Vec<String> = corpus
                    .category_ids()
                    .into_iter()
                    .filter(|c| !dir.target_categories.contains(c))
                    .collect();
                others.shuffle(rng);
                round_robin(&others, k)
            }
            DirectionMode::Surprise => {
                let n = self.items.len() as f64;
                let mut rare: Vec<(usize, String)> = corpus
                    .category_ids()
                    .into_iter()
                    .map(|c| (counts.get(&c).copied().unwrap_or(0), c))
                    .filter(|(count, _)| (*count as f64 / n) < self.underrep_threshold)
                    .collect();
                if rare.is_empty() {
                    rare = corpus
                        .category_ids()
                        .into_iter()
                        .map(|c| (counts.get(&c).copied().unwrap_or(0), c))
                        .collect();
                }
                rare.sort();
                let pool: Vec<String> = rare.into_iter().map(|(_, c)| c).collect();
                round_robin(&pool, k)
            }
        };
        plan.shuffle(rng);
        plan
    }

    /// A random free item of `category`, preferring items never surfaced and
    /// then items satisfying `prefer`.
    fn draw(
        &self,
        corpus: &Corpus,
        category: &str,
        taken: &BTreeSet<String>,
        prefer: &dyn Fn(&ContentItem) -> bool,
        rng: &mut ChaCha8Rng,
    ) -> Option<ContentItem> {
        let free: Vec<&ContentItem> = corpus
            .items_in(category)
            .filter(|it| !taken.contains(&it.item_id))
            .collect();
        let tier = |fresh: bool, preferred: bool| -> Vec<&ContentItem> {
            free.iter()
                .copied()
                .filter(|it| (!fresh || !self.served.contains(&it.item_id)) && (!preferred || prefer(it)))
                .collect()
        };
        [(true, true), (true, false), (false, true), (false, false)]
            .into_iter()
            .map(|(fresh, preferred)| tier(fresh, preferred))
            .find(|t| !t.is_empty())
            .and_then(|t| t.choose(rng).map(|it| (*it).clone()))
    }

    /// Closest stand-in for an exhausted category: the least represented
    /// category that still has a free item.
    fn nearest_category(
        &self,
        corpus: &Corpus,
        wanted: &str,
        excluded: &[String],
        taken: &BTreeSet<String>,
        counts: &BTreeMap<String, usize>,
    ) -> Option<String> {
        corpus
            .category_ids()
            .into_iter()
            .filter(|c| c != wanted && !excluded.contains(c))
            .filter(|c| corpus.items_in(c).any(|it| !taken.contains(&it.item_id)))
            .min_by_key(|c| (counts.get(c).copied().unwrap_or(0), c.clone()))
    }

    /// Shows search results as a block above the feed.
    pub fn set_search_block(&mut self, results: Vec<ContentItem>) {
        self.search_block = results
            .into_iter()
            .map(|item| FeedItem {
                item,
                origin: Origin::Search,
            })
            .collect();
    }

    /// Puts search results into the unsurfaced slots right after the cursor.
    pub fn replace_with_search(&mut self, results: Vec<ContentItem>) -> EventData {
        let in_feed: BTreeSet<String> = self.items.iter().map(|fi| fi.item.item_id.clone()).collect();
        let fresh: Vec<ContentItem> = results
            .into_iter()
            .filter(|it| !in_feed.contains(&it.item_id))
            .collect();
        let slots: Vec<usize> = (self.cursor..self.items.len())
            .filter(|&i| !self.open.contains_key(&self.items[i].item.item_id))
            .take(fresh.len())
            .collect();
        let replaced = slots.len();
        for (slot, item) in slots.into_iter().zip(fresh) {
            self.items[slot] = FeedItem {
                item,
                origin: Origin::Search,
            };
        }
        EventData::CompositionChange {
            cause: ChangeCause::Search,
            counts: self.category_counts(),
            replaced,
            direction: self.direction.clone(),
            fallback: Vec::new(),
        }
    }
}
