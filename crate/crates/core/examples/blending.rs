//! Gradual blending on a bare feed: each refresh swaps about a quarter of
//! the unseen items toward the chosen direction.
//!
//! cargo run -p feedscout --example blending

use feedscout::analysis::shannon_entropy;
use feedscout::corpus::{generate_biased_feed, Corpus, StandardFeed};
use feedscout::dialogue::Direction;
use feedscout::feed::FeedState;

fn main() -> feedscout::Result<()> {
    let corpus = Corpus::synthetic(7);
    let items = generate_biased_feed(&corpus, &StandardFeed::C.spec(), 4)?;
    let mut feed = FeedState::initialize("blend", items, 0.25)?;
    feed.set_direction(Direction::increase("travel"), &corpus)?;

    for round in 1..=6 {
        if feed.replaceable_slots() < feed.replacement_count() {
            feed.start_new_pass();
        }
        feed.refresh_feed(&corpus, round)?;
        let counts = feed.category_counts();
        println!(
            "refresh {round}: travel {:>2}/{}  H = {:.2} bits",
            counts.get("travel").unwrap_or(&0),
            feed.len(),
            shannon_entropy(&feed.current_composition())
        );
        // Read the first few new slots before the next pull.
        let ids: Vec<String> = feed.items()[feed.cursor()..]
            .iter()
            .take(4)
            .map(|fi| fi.item.item_id.clone())
            .collect();
        for (i, id) in ids.iter().enumerate() {
            let t = round * 10_000 + i as u64 * 1000;
            feed.record_impression(id, t)?;
            feed.close_impression(id, t + 800)?;
        }
    }
    Ok(())
}
