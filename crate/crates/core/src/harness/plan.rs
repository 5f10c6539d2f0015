use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::corpus::StandardFeed;
use crate::error::{Error, Result};

/// Which baseline a participant sees first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineOrder {
    FeedFirst,
    SearchFirst,
}

impl BaselineOrder {
    pub const ALL: [BaselineOrder; 2] = [BaselineOrder::FeedFirst, BaselineOrder::SearchFirst];

    pub fn baselines(self) -> [Condition; 2] {
        match self {
            BaselineOrder::FeedFirst => [Condition::Feed, Condition::Search],
            BaselineOrder::SearchFirst => [Condition::Search, Condition::Feed],
        }
    }
}

/// One participant's three sessions: two baselines, then the condition of
/// their group, each on a different standard feed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub participant_id: String,
    pub group: Condition,
    pub order: BaselineOrder,
    pub conditions: [Condition; 3],
    pub feeds: [StandardFeed; 3],
    pub seeds: [u64; 3],
}

impl SessionPlan {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.group, Condition::AiInit | Condition::UserChat) {
            return Err(Error::Validation(format!("group must be AI_INIT or USER_CHAT, not {}", self.group)));
        }
        let [b1, b2] = self.order.baselines();
        if self.conditions != [b1, b2, self.group] {
            return Err(Error::Validation(format!(
                "conditions {:?} do not match order {:?} and group {}",
                self.conditions, self.order, self.group
            )));
        }
        let mut feeds = self.feeds.to_vec();
        feeds.sort();
        feeds.dedup();
        if feeds.len() != 3 {
            return Err(Error::Validation("a participant must see each feed once".into()));
        }
        Ok(())
    }

    /// `(condition, feed, seed)` for each session in order.
    pub fn sessions(&self) -> impl Iterator<Item = (Condition, StandardFeed, u64)> + '_ {
        (0..3).map(|i| (self.conditions[i], self.feeds[i], self.seeds[i]))
    }

    pub fn session_id(&self, condition: Condition) -> String {
        format!("{}-{}", self.participant_id, condition.as_str().to_lowercase())
    }
}

/// Balance key: how often `condition` was paired with `feed` under `order`.
pub type Cell = (Condition, StandardFeed, BaselineOrder);

/// Counts of each (condition, feed, baseline order) combination in a plan.
pub fn cell_counts(plans: &[SessionPlan]) -> BTreeMap<Cell, usize> {
    let mut counts = BTreeMap::new();
    for p in plans {
        for (c, f, _) in p.sessions() {
            *counts.entry((c, f, p.order)).or_insert(0) += 1;
        }
    }
    counts
}

fn permutations() -> Vec<[StandardFeed; 3]> {
    use StandardFeed::*;
    vec![[A, B, C], [A, C, B], [B, A, C], [B, C, A], [C, A, B], [C, B, A]]
}

/// Assigns `n` participants alternately to the AI_INIT and USER_CHAT groups,
/// then gives each a baseline order and feed permutation chosen greedily to
/// keep every (condition, feed, order) cell, and each group's order split,
/// as even as possible. Ties are broken by `master_seed`.
pub fn plan_study(n: usize, master_seed: u64) -> Result<Vec<SessionPlan>> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::Validation(format!("participant count must be even and positive, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut groups: Vec<Condition> = (0..n)
        .map(|i| if i % 2 == 0 { Condition::AiInit } else { Condition::UserChat })
        .collect();
    groups.shuffle(&mut rng);

    let mut combos: Vec<(BaselineOrder, [StandardFeed; 3])> = BaselineOrder::ALL
        .iter()
        .flat_map(|o| permutations().into_iter().map(move |p| (*o, p)))
        .collect();
    let mut cells: BTreeMap<Cell, usize> = BTreeMap::new();
    let mut order_use: BTreeMap<(Condition, BaselineOrder), usize> = BTreeMap::new();
    let mut plans = Vec::with_capacity(n);
    for (i, group) in groups.into_iter().enumerate() {
        combos.shuffle(&mut rng);
        let cost = |(order, feeds): &(BaselineOrder, [StandardFeed; 3])| {
            let [b1, b2] = order.baselines();
            let conds = [b1, b2, group];
            let cell_cost: usize = (0..3)
                .map(|k| {
                    let c = cells.get(&(conds[k], feeds[k], *order)).copied().unwrap_or(0);
                    (c + 1) * (c + 1)
                })
                .sum();
            let o = order_use.get(&(group, *order)).copied().unwrap_or(0);
            cell_cost + 3 * (o + 1) * (o + 1)
        };
        let (order, feeds) = *combos.iter().min_by_key(|c| cost(c)).expect("combos are non-empty");
        let [b1, b2] = order.baselines();
        let conditions = [b1, b2, group];
        for k in 0..3 {
            *cells.entry((conditions[k], feeds[k], order)).or_insert(0) += 1;
        }
        *order_use.entry((group, order)).or_insert(0) += 1;
        plans.push(SessionPlan {
            participant_id: format!("p{:02}", i + 1),
            group,
            order,
            conditions,
            feeds,
            seeds: [rng.gen(), rng.gen(), rng.gen()],
        });
    }
    Ok(plans)
}
