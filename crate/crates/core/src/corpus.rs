//! Categorized content corpus: loading, validation, synthetic generation and
//! biased initial feeds.
//!
//! The on-disk corpus is a line-delimited JSON document. The first record
//! declares the category set; every following line is one item with the
//! fields `item_id, title, cover_ref, author, engagement_count, category`
//! in that order.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::DEFAULT_CATEGORIES;

/// Share below which a category counts as underrepresented in a feed.
pub const UNDERREPRESENTED_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Category {
    pub id: String,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentItem {
    pub item_id: String,
    pub title: String,
    pub cover_ref: String,
    pub author: String,
    pub engagement_count: u64,
    pub category: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusHeader {
    categories: Vec<Category>,
}

/// An immutable, validated collection of categorized items.
#[derive(Debug, Clone)]
pub struct Corpus {
    categories: Vec<Category>,
    items: Vec<ContentItem>,
    by_id: BTreeMap<String, usize>,
    by_category: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn new(categories: Vec<Category>, items: Vec<ContentItem>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::Validation("corpus declares no categories".into()));
        }
        if items.is_empty() {
            return Err(Error::Validation("corpus contains no items".into()));
        }
        let mut by_category: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for c in &categories {
            if c.id.is_empty() {
                return Err(Error::Validation("category id must be non-empty".into()));
            }
            if by_category.insert(c.id.clone(), Vec::new()).is_some() {
                return Err(Error::Validation(format!("duplicate category id `{}`", c.id)));
            }
        }
        let mut by_id = BTreeMap::new();
        for (idx, item) in items.iter().enumerate() {
            let Some(bucket) = by_category.get_mut(&item.category) else {
                return Err(Error::Validation(format!(
                    "item `{}` references unknown category `{}`",
                    item.item_id, item.category
                )));
            };
            bucket.push(idx);
            if by_id.insert(item.item_id.clone(), idx).is_some() {
                return Err(Error::Validation(format!("duplicate item id `{}`", item.item_id)));
            }
        }
        Ok(Self {
            categories,
            items,
            by_id,
            by_category,
        })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_ids(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.id.clone()).collect()
    }

    pub fn has_category(&self, id: &str) -> bool {
        self.by_category.contains_key(id)
    }

    pub fn items(&self) -> &[ContentItem] {
        &self.items
    }

    pub fn item(&self, item_id: &str) -> Option<&ContentItem> {
        self.by_id.get(item_id).map(|&i| &self.items[i])
    }

    /// Items of one category, in corpus order.
    pub fn items_in(&self, category: &str) -> impl Iterator<Item = &ContentItem> {
        self.by_category
            .get(category)
            .into_iter()
            .flatten()
            .map(move |&i| &self.items[i])
    }

    pub fn count_in(&self, category: &str) -> usize {
        self.by_category.get(category).map_or(0, Vec::len)
    }

    /// Parses a line-delimited corpus document.
    pub fn load(reader: impl BufRead) -> Result<Self> {
        let mut header: Option<CorpusHeader> = None;
        let mut items = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if header.is_none() {
                header = Some(serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("category header record: {e}"),
                })?);
                continue;
            }
            let item: ContentItem = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: format!("item record: {e}"),
            })?;
            items.push(item);
        }
        let header = header.ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing category header record".into(),
        })?;
        Self::new(header.categories, items)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(file))
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        let header = CorpusHeader {
            categories: self.categories.clone(),
        };
        writeln!(out, "{}", to_json(&header))?;
        for item in &self.items {
            writeln!(out, "{}", to_json(item))?;
        }
        Ok(())
    }

    /// The bundled synthetic corpus: 320 items over the 14 default
    /// categories, 22 or 23 items per category.
    pub fn synthetic(seed: u64) -> Self {
        Self::synthetic_sized(320, seed)
    }

    pub fn synthetic_sized(total: usize, seed: u64) -> Self {
        const HOOKS: [&str; 8] = [
            "what I learned",
            "a quick guide",
            "my honest take",
            "five ideas to try",
            "before and after",
            "things I wish I knew",
            "a beginner's start",
            "saved for later",
        ];
        const AUTHORS: [&str; 12] = [
            "Lin", "Mei", "Jun", "Xiao", "Yan", "Qing", "Hao", "Rui", "Ning", "Tao", "Wen", "Yu",
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = DEFAULT_CATEGORIES.len();
        let categories: Vec<Category> = DEFAULT_CATEGORIES
            .iter()
            .map(|c| Category {
                id: c.id.to_string(),
                display_name: c.display_name.to_string(),
            })
            .collect();
        let mut items = Vec::with_capacity(total);
        for (ci, info) in DEFAULT_CATEGORIES.iter().enumerate() {
            let count = total / k + usize::from(ci < total % k);
            for j in 0..count {
                let sub = &info.subtopics[j % 3];
                let hook = HOOKS[(j / 3 + ci) % HOOKS.len()];
                let item_id = format!("{}-{:03}", info.id, j + 1);
                items.push(ContentItem {
                    title: format!("{}: {}", sub.label, hook),
                    cover_ref: format!("covers/{item_id}.jpg"),
                    author: format!(
                        "{} {}",
                        AUTHORS[rng.gen_range(0..AUTHORS.len())],
                        rng.gen_range(10..100)
                    ),
                    engagement_count: rng.gen_range(50..20_000),
                    category: info.id.to_string(),
                    item_id,
                });
            }
        }
        Self::new(categories, items).expect("built-in corpus is valid")
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("corpus records serialize")
}

/// Shape of a biased initial feed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedSpec {
    pub dominant_categories: Vec<String>,
    pub concentration: f64,
    pub length: usize,
}

impl FeedSpec {
    pub fn new(dominant: &[&str], concentration: f64, length: usize) -> Self {
        Self {
            dominant_categories: dominant.iter().map(|s| s.to_string()).collect(),
            concentration,
            length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dominant_categories.len();
        if !(2..=3).contains(&n) {
            return Err(Error::Validation(format!(
                "a biased feed needs 2-3 dominant categories, got {n}"
            )));
        }
        let distinct: BTreeSet<_> = self.dominant_categories.iter().collect();
        if distinct.len() != n {
            return Err(Error::Validation("dominant categories must be distinct".into()));
        }
        if !(self.concentration > 0.0 && self.concentration < 1.0) {
            return Err(Error::Validation(format!(
                "concentration must lie strictly between 0 and 1, got {}",
                self.concentration
            )));
        }
        if self.length == 0 {
            return Err(Error::Validation("feed length must be positive".into()));
        }
        Ok(())
    }

    /// Number of items drawn from the dominant categories.
    pub fn dominant_count(&self) -> usize {
        (self.concentration * self.length as f64).round() as usize
    }
}

/// The three study feeds: 35 items at 80% concentration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StandardFeed {
    A,
    B,
    C,
}

impl StandardFeed {
    pub const ALL: [StandardFeed; 3] = [StandardFeed::A, StandardFeed::B, StandardFeed::C];

    pub fn spec(self) -> FeedSpec {
        match self {
            StandardFeed::A => FeedSpec::new(&["food", "fashion"], 0.8, 35),
            StandardFeed::B => FeedSpec::new(&["skincare", "fitness"], 0.8, 35),
            StandardFeed::C => FeedSpec::new(&["home_decor", "photography"], 0.8, 35),
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(StandardFeed::A),
            "B" => Ok(StandardFeed::B),
            "C" => Ok(StandardFeed::C),
            other => Err(Error::Validation(format!("unknown feed `{other}`"))),
        }
    }
}

/// Builds a biased feed of `spec.length` items.
///
/// `round(concentration * length)` items come from the dominant categories,
/// split as evenly as possible with the remainder going to earlier-listed
/// categories. The scattered remainder is spread round-robin over the
/// non-dominant categories (in a seeded order), so that each one stays under
/// the underrepresentation share whenever the category count allows it.
pub fn generate_biased_feed(corpus: &Corpus, spec: &FeedSpec, seed: u64) -> Result<Vec<ContentItem>> {
    spec.validate()?;
    for c in &spec.dominant_categories {
        if !corpus.has_category(c) {
            return Err(Error::Validation(format!("unknown dominant category `{c}`")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_dom = spec.dominant_count();
    let d = spec.dominant_categories.len();
    let mut quotas: Vec<(String, usize)> = spec
        .dominant_categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), n_dom / d + usize::from(i < n_dom % d)))
        .collect();
    for (c, need) in &quotas {
        let available = corpus.count_in(c);
        if available < *need {
            return Err(Error::Capacity {
                category: c.clone(),
                needed: *need,
                available,
            });
        }
    }

    let scattered = spec.length - n_dom;
    let mut others: Vec<String> = corpus
        .categories()
        .iter()
        .map(|c| c.id.clone())
        .filter(|id| !spec.dominant_categories.contains(id))
        .collect();
    others.shuffle(&mut rng);
    let capacity: usize = others.iter().map(|c| corpus.count_in(c)).sum();
    if capacity < scattered {
        return Err(Error::Capacity {
            category: "non-dominant".into(),
            needed: scattered,
            available: capacity,
        });
    }
    let mut extra: Vec<usize> = vec![0; others.len()];
    let mut placed = 0;
    while placed < scattered {
        for (i, c) in others.iter().enumerate() {
            if placed == scattered {
                break;
            }
            if extra[i] < corpus.count_in(c) {
                extra[i] += 1;
                placed += 1;
            }
        }
    }
    quotas.extend(others.into_iter().zip(extra).filter(|(_, n)| *n > 0));

    let mut feed = Vec::with_capacity(spec.length);
    for (category, n) in quotas {
        let pool: Vec<&ContentItem> = corpus.items_in(&category).collect();
        feed.extend(pool.choose_multiple(&mut rng, n).map(|it| (*it).clone()));
    }
    feed.shuffle(&mut rng);
    Ok(feed)
}
