use std::cmp::Reverse;

use crate::corpus::{Corpus, ContentItem};
use crate::error::{Error, Result};
use crate::taxonomy::category_info;

/// Score added when a query token names an item's category. It outweighs
/// any number of title matches a short query can produce.
const CATEGORY_MATCH: usize = 10;

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '_' && c != '-')
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Words that name a category exactly: its id, its display name words and,
/// for built-in categories, its synonyms.
fn category_words(corpus: &Corpus, category: &str) -> Vec<String> {
    let mut words = vec![category.to_lowercase()];
    if let Some(c) = corpus.categories().iter().find(|c| c.id == category) {
        words.extend(tokens(&c.display_name));
    }
    if let Some(info) = category_info(category) {
        words.extend(info.synonyms.iter().map(|s| s.to_string()));
    }
    words
}

/// Keyword and category search over the whole corpus.
///
/// Each query token scores a title match (case-insensitive substring) and a
/// category match (exact word). Results are ordered by score, then
/// engagement, then item id. A query with no matches returns an empty list.
pub fn search_corpus(corpus: &Corpus, query: &str) -> Result<Vec<ContentItem>> {
    let toks = tokens(query);
    if toks.is_empty() {
        return Err(Error::Validation("search query is empty".into()));
    }
    let cat_words: Vec<(String, Vec<String>)> = corpus
        .category_ids()
        .into_iter()
        .map(|c| {
            let words = category_words(corpus, &c);
            (c, words)
        })
        .collect();
    let mut scored: Vec<(usize, &ContentItem)> = corpus
        .items()
        .iter()
        .filter_map(|item| {
            let title = item.title.to_lowercase();
            let words = cat_words
                .iter()
                .find(|(c, _)| *c == item.category)
                .map(|(_, w)| w.as_slice())
                .unwrap_or_default();
            let score: usize = toks
                .iter()
                .map(|t| usize::from(title.contains(t.as_str())) + CATEGORY_MATCH * usize::from(words.contains(t)))
                .sum();
            (score > 0).then_some((score, item))
        })
        .collect();
    scored.sort_by_key(|(score, item)| (Reverse(*score), Reverse(item.engagement_count), item.item_id.clone()));
    Ok(scored.into_iter().map(|(_, item)| item.clone()).collect())
}
