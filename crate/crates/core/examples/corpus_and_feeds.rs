//! Builds the synthetic corpus, prints the three standard biased feeds and
//! writes the corpus in its file format so it can be edited and reloaded.
//!
//! cargo run -p feedscout --example corpus_and_feeds

use std::collections::BTreeMap;

use feedscout::analysis::{detect_dominant, detect_underrepresented, shannon_entropy, CategoryDistribution};
use feedscout::corpus::{generate_biased_feed, Corpus, StandardFeed};

fn main() -> feedscout::Result<()> {
    let corpus = Corpus::synthetic(7);
    println!("{} items in {} categories", corpus.items().len(), corpus.categories().len());

    for feed in StandardFeed::ALL {
        let items = generate_biased_feed(&corpus, &feed.spec(), 1)?;
        let mut counts = BTreeMap::new();
        for it in &items {
            *counts.entry(it.category.clone()).or_insert(0) += 1;
        }
        let dist = CategoryDistribution::from_counts(&counts)?;
        let dominant: Vec<String> = detect_dominant(&dist, 2)
            .into_iter()
            .map(|(c, p)| format!("{c} {:.0}%", p * 100.0))
            .collect();
        let under = detect_underrepresented(&dist, &corpus.category_ids(), 0.05)?;
        println!(
            "\nfeed {feed:?}: {} items, H = {:.2} bits\n  dominant: {}\n  underrepresented: {}",
            items.len(),
            shannon_entropy(&dist),
            dominant.join(", "),
            under.join(" ")
        );
        for it in items.iter().take(3) {
            println!("  {:<14} {}", it.category, it.title);
        }
    }

    // Round-trip through the on-disk format.
    let path = std::env::temp_dir().join("feedscout-corpus.jsonl");
    corpus.write(std::fs::File::create(&path)?)?;
    let reloaded = Corpus::load_path(&path)?;
    println!("\nwrote and reloaded {} ({} items)", path.display(), reloaded.items().len());
    Ok(())
}
